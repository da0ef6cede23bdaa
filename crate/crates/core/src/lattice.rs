//! Brute-force diamond lattices.
//!
//! A level-0 diamond is one bond. A level-`(n+1)` diamond is `b` parallel
//! branches, each a series of `s` level-`n` diamonds. The wall is the
//! trajectory that takes branch 0 at every level; its bonds are numbered
//! `0..s^n` from source to sink. A trajectory is a choice of branch in every
//! diamond it traverses, so it is enumerated as a tree of branch choices;
//! only the set of wall bonds it uses matters for the energy.

use crate::error::{Error, Result};
use crate::model::{log_m, log_sum_exp, reduce_leaves, DisorderLaw, LogWeight, ModelParams};
use crate::rng::{Domain, StreamFactory};
use crate::walk::{build_q_table_for, path_count};

/// Enumeration refuses lattices with more trajectories than this.
pub const MAX_TRAJECTORIES: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiamondLattice {
    pub b: usize,
    pub s: usize,
    pub level: usize,
}

#[derive(Default)]
struct Trace {
    hits: Vec<usize>,
    entered: Vec<usize>,
    mark_level: Option<usize>,
}

impl DiamondLattice {
    pub fn new(b: usize, s: usize, level: usize) -> Result<Self> {
        if b < 2 || s < 2 {
            return Err(Error::InvalidParams(format!(
                "need b, s >= 2, got b={b} s={s}"
            )));
        }
        let lat = Self { b, s, level };
        let log_count = path_count(b, s, level)?.log;
        if log_count > MAX_TRAJECTORIES.ln() + 1e-9 {
            return Err(Error::Resource(format!(
                "level-{level} lattice with b={b}, s={s} has e^{log_count:.1} trajectories, \
                 above the enumeration budget of {MAX_TRAJECTORIES:e}"
            )));
        }
        Ok(lat)
    }

    /// Number of bonds on the wall, `s^level`.
    pub fn wall_len(&self) -> usize {
        self.s.pow(self.level as u32)
    }

    /// Calls `f` once per trajectory with the sorted wall positions it uses.
    pub fn for_each_trajectory(&self, mut f: impl FnMut(&[usize])) {
        let mut tr = Trace::default();
        self.diamond(
            self.level,
            0,
            true,
            &mut tr,
            &mut |t: &mut Trace| f(&t.hits),
        );
    }

    /// Like [`for_each_trajectory`](Self::for_each_trajectory), also passing
    /// the indices of the wall sub-diamonds of level `k` the trajectory enters.
    pub fn for_each_trajectory_marked(&self, k: usize, mut f: impl FnMut(&[usize], &[usize])) {
        let mut tr = Trace {
            mark_level: Some(k),
            ..Trace::default()
        };
        self.diamond(self.level, 0, true, &mut tr, &mut |t: &mut Trace| {
            f(&t.hits, &t.entered)
        });
    }

    pub fn trajectory_count(&self) -> u64 {
        let mut n = 0u64;
        self.for_each_trajectory(|_| n += 1);
        n
    }

    fn diamond(
        &self,
        level: usize,
        pos: usize,
        on_wall: bool,
        tr: &mut Trace,
        k: &mut dyn FnMut(&mut Trace),
    ) {
        let marked = on_wall && tr.mark_level == Some(level);
        if marked {
            tr.entered.push(pos / self.s.pow(level as u32));
        }
        if level == 0 {
            if on_wall {
                tr.hits.push(pos);
            }
            k(tr);
            if on_wall {
                tr.hits.pop();
            }
        } else {
            for branch in 0..self.b {
                self.series(level - 1, pos, on_wall && branch == 0, 0, tr, k);
            }
        }
        if marked {
            tr.entered.pop();
        }
    }

    fn series(
        &self,
        level: usize,
        pos: usize,
        on_wall: bool,
        j: usize,
        tr: &mut Trace,
        k: &mut dyn FnMut(&mut Trace),
    ) {
        if j == self.s {
            k(tr);
            return;
        }
        let stride = self.s.pow(level as u32);
        self.diamond(
            level,
            pos + j * stride,
            on_wall,
            tr,
            &mut |t: &mut Trace| self.series(level, pos, on_wall, j + 1, t, k),
        );
    }
}

/// Leaf log-weights `beta * omega_i + h - log M(beta)`.
pub fn leaf_log_weights(
    disorder: &[f64],
    params: &ModelParams,
    law: &DisorderLaw,
) -> Result<Vec<f64>> {
    params.validate()?;
    let shift = params.h - log_m(law, params.beta)?;
    Ok(disorder.iter().map(|w| params.beta * w + shift).collect())
}

/// Exact log partition function by averaging over every trajectory.
pub fn enumerate_partition(
    lattice: &DiamondLattice,
    disorder: &[f64],
    params: &ModelParams,
    law: &DisorderLaw,
) -> Result<f64> {
    if params.b != lattice.b || params.s != lattice.s {
        return Err(Error::InvalidParams(
            "lattice and parameters disagree on (b, s)".into(),
        ));
    }
    let x = leaf_log_weights(disorder, params, law)?;
    enumerate_partition_weights(lattice, &x)
}

/// As [`enumerate_partition`] with the leaf log-weights given directly.
pub fn enumerate_partition_weights(lattice: &DiamondLattice, leaf_weights: &[f64]) -> Result<f64> {
    if leaf_weights.len() != lattice.wall_len() {
        return Err(Error::Arity {
            expected: lattice.wall_len(),
            got: leaf_weights.len(),
        });
    }
    let mut energies = Vec::new();
    lattice.for_each_trajectory(|hits| energies.push(hits.iter().map(|&i| leaf_weights[i]).sum()));
    Ok(log_sum_exp(&energies) - (energies.len() as f64).ln())
}

/// Trajectories that share no bond with the wall, out of all trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscapeCount {
    pub avoiding: u64,
    pub total: u64,
}

impl EscapeCount {
    pub fn probability(&self) -> f64 {
        self.avoiding as f64 / self.total as f64
    }
}

pub fn enumerate_escape(lattice: &DiamondLattice) -> EscapeCount {
    let mut c = EscapeCount {
        avoiding: 0,
        total: 0,
    };
    lattice.for_each_trajectory(|hits| {
        c.total += 1;
        if hits.is_empty() {
            c.avoiding += 1;
        }
    });
    c
}

/// Probability that the uniform walk crosses the lattice without touching
/// the wall.
pub fn enumerate_escape_probability(lattice: &DiamondLattice) -> f64 {
    enumerate_escape(lattice).probability()
}

/// Among trajectories entering the wall sub-diamond `index` of level `k`,
/// the fraction whose wall contacts all lie inside it; also returns the
/// fraction of all trajectories that enter it.
pub fn enumerate_crossing_probability(
    lattice: &DiamondLattice,
    k: usize,
    index: usize,
) -> Result<(f64, f64)> {
    if k > lattice.level {
        return Err(Error::Index(format!(
            "k = {k} exceeds level {}",
            lattice.level
        )));
    }
    let width = lattice.s.pow(k as u32);
    if index >= lattice.wall_len() / width {
        return Err(Error::Index(format!("sub-diamond {index} out of range")));
    }
    let range = index * width..(index + 1) * width;
    let (mut total, mut entering, mut confined) = (0u64, 0u64, 0u64);
    lattice.for_each_trajectory_marked(k, |hits, entered| {
        total += 1;
        if entered.contains(&index) {
            entering += 1;
            if hits.iter().all(|h| range.contains(h)) {
                confined += 1;
            }
        }
    });
    Ok((
        confined as f64 / entering as f64,
        entering as f64 / total as f64,
    ))
}

/// Outcome of [`oracle_check`] on one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub b: usize,
    pub s: usize,
    pub level: usize,
    pub draws: usize,
    pub trajectories: u64,
    pub path_count_matches: bool,
    /// Largest `|R_enum / R_rec - 1|` over the draws.
    pub max_rel_err: f64,
    pub escape: EscapeCount,
    /// `q_n` from the recursion.
    pub q_n: f64,
}

impl OracleReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.path_count_matches
            && self.max_rel_err <= tol
            && (self.escape.probability() - self.q_n).abs() <= 1e-15
    }
}

/// Compares exhaustive enumeration against the recursion on `draws`
/// disorder realizations drawn from `law`, and the escape fraction against
/// the `q` table. Draw `d` uses stream `(Oracle, level, d)`.
pub fn oracle_check(
    params: &ModelParams,
    law: &DisorderLaw,
    level: usize,
    draws: usize,
    seed: u64,
) -> Result<OracleReport> {
    params.validate()?;
    let lat = DiamondLattice::new(params.b, params.s, level)?;
    let shift = params.h - log_m(law, params.beta)?;
    let streams = StreamFactory::new(seed);
    let mut max_rel_err = 0.0f64;
    for d in 0..draws {
        let mut rng = streams.stream(Domain::Oracle, level as u64, d as u64);
        let x: Vec<f64> = (0..lat.wall_len())
            .map(|_| params.beta * law.draw(&mut rng) + shift)
            .collect();
        let leaves: Vec<LogWeight> = x.iter().map(|&v| LogWeight(v)).collect();
        let rec = reduce_leaves(&leaves, params.s, params.b)?.0;
        let enu = enumerate_partition_weights(&lat, &x)?;
        max_rel_err = max_rel_err.max((enu - rec).exp_m1().abs());
    }
    let escape = enumerate_escape(&lat);
    let expected = path_count(params.b, params.s, level)?.exact;
    let path_count_matches = expected.is_some_and(|n| n == escape.total.into());
    let q_n = build_q_table_for(params.b, params.s, level)?.q[level];
    Ok(OracleReport {
        b: params.b,
        s: params.s,
        level,
        draws,
        trajectories: escape.total,
        path_count_matches,
        max_rel_err,
        escape,
        q_n,
    })
}
