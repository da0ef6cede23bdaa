//! Probabilities for the uniform walk on a diamond lattice: `q_n`, the
//! chance of crossing a level-`n` diamond without touching the wall, and
//! `p_{k,n}`, the chance of touching it only inside one designated level-`k`
//! sub-diamond given the walk passes through that sub-diamond.

use num_bigint::BigUint;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTables {
    pub b: usize,
    pub s: usize,
    /// `q_0 = 0`, `q_{m+1} = (q_m^s + b - 1) / b`.
    pub q: Vec<f64>,
    /// `1 - q_m`, iterated directly so it keeps relative accuracy as `q_m -> 1`.
    pub escape_complement: Vec<f64>,
    /// `log_prefix[m] = sum_{j=1}^{m-1} log q_j` (0 for `m <= 1`).
    log_prefix: Vec<f64>,
}

/// Table of `q_0..=q_n` for the marginal lattice `b = s`.
pub fn build_q_table(s: usize, n: usize) -> Result<WalkTables> {
    build_q_table_for(s, s, n)
}

/// Table of `q_0..=q_n` for general `(b, s)`: a walk avoids the wall in a
/// level-`(m+1)` diamond if it takes one of the `b - 1` other branches, or
/// takes the wall branch and avoids the wall in all `s` sub-diamonds.
pub fn build_q_table_for(b: usize, s: usize, n: usize) -> Result<WalkTables> {
    if b < 2 || s < 2 {
        return Err(Error::InvalidParams(format!(
            "need b, s >= 2, got b={b} s={s}"
        )));
    }
    let (bf, sf) = (b as f64, s as f64);
    let mut q: Vec<f64> = Vec::with_capacity(n + 1);
    let mut comp: Vec<f64> = Vec::with_capacity(n + 1);
    q.push(0.0);
    comp.push(1.0);
    for m in 0..n {
        let qm = q[m];
        q.push((qm.powi(s as i32) + (bf - 1.0)) / bf);
        // 1 - q_{m+1} = (1 - (1 - p)^s) / b
        comp.push(-(sf * (-comp[m]).ln_1p()).exp_m1() / bf);
    }
    let mut log_prefix = vec![0.0f64; n + 2];
    for m in 2..=n + 1 {
        log_prefix[m] = log_prefix[m - 1] + q[m - 1].ln();
    }
    log_prefix.truncate(n + 1);
    Ok(WalkTables {
        b,
        s,
        q,
        escape_complement: comp,
        log_prefix,
    })
}

impl WalkTables {
    /// Largest level in the table.
    pub fn max_level(&self) -> usize {
        self.q.len() - 1
    }

    /// `log p_{k,n} = (s-1) sum_{j=k}^{n-1} log q_j`.
    pub fn log_p_kn(&self, k: usize, n: usize) -> Result<f64> {
        if k > n {
            return Err(Error::Index(format!("k = {k} exceeds n = {n}")));
        }
        if n > self.max_level() {
            return Err(Error::Index(format!(
                "n = {n} beyond table length {}",
                self.max_level()
            )));
        }
        if k == n {
            return Ok(0.0);
        }
        if k == 0 {
            return Err(Error::Domain("k = 0 makes p_{k,n} vanish (q_0 = 0)".into()));
        }
        Ok((self.s as f64 - 1.0) * (self.log_prefix[n] - self.log_prefix[k]))
    }

    pub fn log_q(&self, n: usize) -> Result<f64> {
        self.q.get(n).map(|q| q.ln()).ok_or_else(|| {
            Error::Index(format!("n = {n} beyond table length {}", self.max_level()))
        })
    }
}

/// Free function form of [`WalkTables::log_p_kn`].
pub fn p_kn(tables: &WalkTables, k: usize, n: usize) -> Result<f64> {
    tables.log_p_kn(k, n)
}

/// Exact trajectory counts are produced up to this level.
pub const MAX_EXACT_LEVEL: usize = 12;
/// ...and only while the integer has at most this many bits.
pub const MAX_EXACT_BITS: f64 = (1u64 << 22) as f64;

/// Number of walk trajectories `N_n` on a level-`n` diamond.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCount {
    pub exact: Option<BigUint>,
    /// `log N_n = log b * (s^n - 1) / (s - 1)`
    pub log: f64,
}

/// `N_0 = 1`, `N_{n+1} = b N_n^s`.
pub fn path_count(b: usize, s: usize, n: usize) -> Result<PathCount> {
    if b < 2 || s < 2 {
        return Err(Error::InvalidParams(format!(
            "need b, s >= 2, got b={b} s={s}"
        )));
    }
    let (bf, sf) = (b as f64, s as f64);
    let log = bf.ln() * (sf.powi(n as i32) - 1.0) / (sf - 1.0);
    let exact = if n <= MAX_EXACT_LEVEL && log / std::f64::consts::LN_2 <= MAX_EXACT_BITS {
        let mut x = BigUint::from(1u32);
        for _ in 0..n {
            x = x.pow(s as u32) * BigUint::from(b);
        }
        Some(x)
    } else {
        None
    };
    Ok(PathCount { exact, log })
}

/// Natural logarithm of a big integer, accurate to a few ulps.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top: BigUint = x >> shift;
    let top = top.to_u64_digits().first().copied().unwrap_or(0) as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}
