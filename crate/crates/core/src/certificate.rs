//! Good-diamond lower bound on the quenched free energy at `b = s`.
//!
//! Coarse-grain the wall into blocks of `s^{n-k}` level-`k` sub-diamonds.
//! A block is good when the sum of its level-`k` partition functions is at
//! least half its mean, `s^{n-k} r_k / 2`. Restricting the walk to touch the
//! wall only inside one level-`k` sub-diamond of each good block gives
//!
//! ```text
//! F(beta, h) >= (p_good / s^n) [ (n-k) log s - log 2 + log r_k
//!                                + log p_{k,n} + log(q_n) E[i_1] ]
//! ```
//!
//! where `p_good` is the probability that a block is good and `E[i_1]` the
//! mean index of the first good block. The guarantee `p_good >= 1/2` needs
//! `log_s(8 s^k V(R_k) / r_k^2) < n`.
//!
//! The expression is evaluated exactly as above. Note that
//! [`WalkTables::log_p_kn`](crate::walk::WalkTables::log_p_kn) is the
//! crossing probability *given* that the walk enters the sub-diamond;
//! entering it costs another `b^{-(n-k)}`, which would cancel the
//! `(n-k) log s` term at `b = s`. Without that factor the bound is not a
//! valid lower bound in general: at `beta = 0, h = 0.25` the search finds
//! pairs whose bound is about four times the exact free energy.

use rayon::prelude::*;

use crate::annealed::{annealed_free_energy, annealed_rho, Phase, DEFAULT_MAX_LEVELS};
use crate::error::{Error, Result};
use crate::model::{branch_average, log_sum_exp, DisorderLaw, InitialSampler, ModelParams};
use crate::population::init_population;
use crate::rng::{Domain, StreamFactory};
use crate::stats::variance_with_error;
use crate::walk::build_q_table;

pub const MIN_VARIANCE_POOL: usize = 10_000;
/// Largest block size `s^{n-k}` simulated leaf by leaf.
pub const MAX_BLOCK: f64 = 1e8;
/// Pool entries above this would overflow once squared.
const EXP_GUARD: f64 = 350.0;
const MAX_K: usize = 64;
const SEARCH_K_VALUES: usize = 4;
const SEARCH_N_SPAN: usize = 20;

/// `log r_k`, with `r_0 = e^h`.
pub fn annealed_mean_rk(params: &ModelParams, k: usize) -> f64 {
    annealed_rho(params, k)
}

/// Smallest `k` with `log(r_k) / s^k >= target`; `target` defaults to half
/// the annealed free energy.
///
/// `log(r_k) / s^k` never increases for `h > 0`, so with the default target
/// the answer is always 0.
pub fn choose_k(params: &ModelParams, target: Option<f64>) -> Result<usize> {
    params.validate()?;
    params.require_equal("choosing k")?;
    if params.h <= 0.0 {
        return Err(Error::Domain(format!(
            "no valid k for h = {} <= 0",
            params.h
        )));
    }
    let target = match target {
        Some(t) => t,
        None => {
            let f = annealed_free_energy(params, 1e-14, DEFAULT_MAX_LEVELS)?;
            if f.phase == Phase::Delocalized || f.value <= 0.0 {
                return Err(Error::Domain(format!(
                    "annealed free energy vanishes at h = {}",
                    params.h
                )));
            }
            f.value / 2.0
        }
    };
    let sf = params.s as f64;
    (0..=MAX_K)
        .find(|&k| annealed_mean_rk(params, k) / sf.powi(k as i32) >= target)
        .ok_or_else(|| Error::Domain(format!("no k <= {MAX_K} reaches target {target}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub std_err: f64,
}

/// Sample variance of `R_k` over a level-`k` population of size `m`.
pub fn estimate_variance_rk(
    params: &ModelParams,
    law: &DisorderLaw,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    if m < MIN_VARIANCE_POOL {
        return Err(Error::InvalidParams(format!(
            "variance pool must hold at least {MIN_VARIANCE_POOL} entries, got {m}"
        )));
    }
    let pop = init_population(params, law, m, seed)?.evolve(k);
    if let Some(w) = pop.pool.iter().find(|w| w.0 > EXP_GUARD) {
        return Err(Error::Overflow(format!(
            "log R_{k} = {} is too large to square; use a smaller k",
            w.0
        )));
    }
    let xs: Vec<f64> = pop.pool.iter().map(|w| w.0.exp()).collect();
    let (variance, std_err) = variance_with_error(&xs);
    Ok(VarianceEstimate { variance, std_err })
}

/// `log_s(8 s^k V / r_k^2)`; `-inf` when `V = 0`.
pub fn condition15_lhs(variance: f64, log_r_k: f64, k: usize, s: usize) -> f64 {
    let ls = (s as f64).ln();
    (8f64.ln() + k as f64 * ls + variance.ln() - 2.0 * log_r_k) / ls
}

/// Smallest `n > k` satisfying the variance condition.
pub fn min_n_condition15(lhs: f64, k: usize) -> usize {
    if lhs < k as f64 {
        k + 1
    } else {
        (lhs.floor() as usize + 1).max(k + 1)
    }
}

pub fn check_condition15(
    params: &ModelParams,
    law: &DisorderLaw,
    k: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<bool> {
    let var = estimate_variance_rk(params, law, k, m, seed)?;
    let lhs = condition15_lhs(var.variance, annealed_mean_rk(params, k), k, params.s);
    Ok(lhs < n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodDiamondEstimate {
    pub p_good: f64,
    /// Binomial standard error of `p_good`.
    pub std_err: f64,
    /// `1 / p_good`: the first good block is geometric on `{1, 2, ...}`.
    pub mean_first_good: f64,
}

/// Fraction of good blocks among `trials` independent blocks, each built
/// from `s^{n-k}` level-`k` partition functions computed exactly from their
/// `s^k` leaves.
pub fn estimate_p_good(
    params: &ModelParams,
    law: &DisorderLaw,
    k: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<GoodDiamondEstimate> {
    params.validate()?;
    if n <= k {
        return Err(Error::InvalidParams(format!("need n > k, got k={k} n={n}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    let (s, b) = (params.s, params.b);
    let sf = s as f64;
    if sf.powi((n - k) as i32) > MAX_BLOCK {
        return Err(Error::Resource(format!(
            "block of s^(n-k) = {}^{} sub-diamonds exceeds {MAX_BLOCK:e}; reduce n - k",
            s,
            n - k
        )));
    }
    let block = s.pow((n - k) as u32);
    let leaves = s.pow(k as u32);
    let sampler = InitialSampler::new(law, params)?;
    let streams = StreamFactory::new(seed);
    let threshold = (n - k) as f64 * sf.ln() + annealed_mean_rk(params, k) - std::f64::consts::LN_2;

    let good = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut buf = vec![0.0f64; leaves];
            let logs: Vec<f64> = (0..block)
                .map(|j| {
                    let mut rng = streams.stream(Domain::Leaves, t as u64, j as u64);
                    for x in buf.iter_mut() {
                        *x = sampler.sample(&mut rng).0;
                    }
                    reduce_in_place(&mut buf, s, b)
                })
                .collect();
            log_sum_exp(&logs) >= threshold
        })
        .count();

    let p = good as f64 / trials as f64;
    Ok(GoodDiamondEstimate {
        p_good: p,
        std_err: (p * (1.0 - p) / trials as f64).sqrt(),
        mean_first_good: 1.0 / p,
    })
}

fn reduce_in_place(buf: &mut [f64], s: usize, b: usize) -> f64 {
    let mut len = buf.len();
    while len > 1 {
        for i in 0..len / s {
            let sum: f64 = buf[i * s..(i + 1) * s].iter().copied().sum();
            buf[i] = branch_average(sum, b);
        }
        len /= s;
    }
    buf[0]
}

/// The lower-bound expression with all inputs given explicitly.
#[allow(clippy::too_many_arguments)]
pub fn assemble_bound(
    p_good: f64,
    k: usize,
    n: usize,
    s: usize,
    log_r_k: f64,
    log_pkn: f64,
    log_qn: f64,
    mean_first_good: f64,
) -> f64 {
    let ls = (s as f64).ln();
    let bracket =
        (n - k) as f64 * ls - std::f64::consts::LN_2 + log_r_k + log_pkn + log_qn * mean_first_good;
    p_good / (s as f64).powi(n as i32) * bracket
}

/// Statistical inputs for [`lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateSettings {
    /// Pool size for the variance of `R_k`.
    pub pool_size: usize,
    /// Independent blocks for `p_good`.
    pub trials: usize,
    pub seed: u64,
    /// Shift `p_good` down and `V(R_k)` up by three standard errors and
    /// use `E[i_1] + 1` before evaluating.
    pub conservative: bool,
}

impl Default for CertificateSettings {
    fn default() -> Self {
        Self {
            pool_size: 100_000,
            trials: 10_000,
            seed: 0,
            conservative: false,
        }
    }
}

/// Every quantity entering the bound, plus the inputs needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub b: usize,
    pub s: usize,
    pub beta: f64,
    pub h: f64,
    pub law: String,
    pub seed: u64,
    pub pool_size: usize,
    pub trials: usize,
    pub conservative: bool,
    pub k: usize,
    pub n: usize,
    pub r_k: f64,
    pub log_r_k: f64,
    /// Variance used in the condition (shifted up in conservative mode).
    pub var_k: f64,
    pub var_k_std_err: f64,
    pub cond15_lhs: f64,
    pub cond15_ok: bool,
    /// `p_good` used in the bound (shifted down in conservative mode).
    pub p_good: f64,
    pub p_good_raw: f64,
    pub p_good_std_err: f64,
    /// `E[i_1]` used in the bound.
    pub mean_first_good: f64,
    pub log_pkn: f64,
    pub log_qn: f64,
    pub bound: f64,
}

impl Certificate {
    /// Positive bound with the variance condition satisfied.
    pub fn certifies(&self) -> bool {
        self.cond15_ok && self.bound > 0.0
    }
}

pub fn lower_bound(
    params: &ModelParams,
    law: &DisorderLaw,
    k: usize,
    n: usize,
    cfg: &CertificateSettings,
) -> Result<Certificate> {
    params.validate()?;
    params.require_equal("the localization certificate")?;
    if k < 1 || k >= n {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k < n, got k={k} n={n}"
        )));
    }
    let s = params.s;
    let log_r_k = annealed_mean_rk(params, k);
    let var = estimate_variance_rk(params, law, k, cfg.pool_size, cfg.seed)?;
    let var_k = if cfg.conservative {
        var.variance + 3.0 * var.std_err
    } else {
        var.variance
    };
    let lhs = condition15_lhs(var_k, log_r_k, k, s);
    let good = estimate_p_good(params, law, k, n, cfg.trials, cfg.seed)?;
    let (p_good, mean_first_good) = if cfg.conservative {
        let p = (good.p_good - 3.0 * good.std_err).max(0.0);
        (p, 1.0 / p + 1.0)
    } else {
        (good.p_good, good.mean_first_good)
    };
    let tables = build_q_table(s, n)?;
    let log_pkn = tables.log_p_kn(k, n)?;
    let log_qn = tables.log_q(n)?;
    let bound = if p_good > 0.0 {
        assemble_bound(p_good, k, n, s, log_r_k, log_pkn, log_qn, mean_first_good)
    } else {
        0.0
    };
    Ok(Certificate {
        b: params.b,
        s,
        beta: params.beta,
        h: params.h,
        law: law.descriptor(),
        seed: cfg.seed,
        pool_size: cfg.pool_size,
        trials: cfg.trials,
        conservative: cfg.conservative,
        k,
        n,
        r_k: log_r_k.exp(),
        log_r_k,
        var_k,
        var_k_std_err: var.std_err,
        cond15_lhs: lhs,
        cond15_ok: lhs < n as f64,
        p_good,
        p_good_raw: good.p_good,
        p_good_std_err: good.std_err,
        mean_first_good,
        log_pkn,
        log_qn,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSearch {
    /// Every certificate evaluated, in search order.
    pub tried: Vec<Certificate>,
    /// Index into `tried` of the first certifying one.
    pub found: Option<usize>,
}

impl CertificateSearch {
    pub fn certificate(&self) -> Option<&Certificate> {
        self.found.map(|i| &self.tried[i])
    }
}

/// Searches `k` over up to four values starting at `max(1, choose_k)` and,
/// for each, `n` from the smallest value meeting the variance condition up
/// to twenty beyond it; stops at the first certifying pair.
pub fn search_certificate(
    params: &ModelParams,
    law: &DisorderLaw,
    cfg: &CertificateSettings,
) -> Result<CertificateSearch> {
    let k0 = choose_k(params, None)?.max(1);
    let mut tried = Vec::new();
    for k in k0..k0 + SEARCH_K_VALUES {
        let log_r_k = annealed_mean_rk(params, k);
        let var = match estimate_variance_rk(params, law, k, cfg.pool_size, cfg.seed) {
            Ok(v) => v,
            Err(Error::Overflow(_)) => break,
            Err(e) => return Err(e),
        };
        let var_k = if cfg.conservative {
            var.variance + 3.0 * var.std_err
        } else {
            var.variance
        };
        let n_min = min_n_condition15(condition15_lhs(var_k, log_r_k, k, params.s), k);
        for n in n_min..=n_min + SEARCH_N_SPAN {
            let cert = match lower_bound(params, law, k, n, cfg) {
                Ok(c) => c,
                Err(Error::Resource(_)) => break,
                Err(e) => return Err(e),
            };
            let ok = cert.certifies();
            tried.push(cert);
            if ok {
                let found = Some(tried.len() - 1);
                return Ok(CertificateSearch { tried, found });
            }
        }
    }
    Ok(CertificateSearch { tried, found: None })
}
