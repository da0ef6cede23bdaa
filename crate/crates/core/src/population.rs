//! Population dynamics for the quenched model.
//!
//! A pool of `M` log partition functions stands in for the iid family at one
//! level of the hierarchy. Each step builds a new pool whose entry `i`
//! combines `s` parents drawn uniformly with replacement from the old pool.
//! Entry `i` at level `n` depends only on the coordinates
//! `(seed, level n, index i)` and the previous pool, so results are
//! identical under any rayon thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{branch_average, DisorderLaw, InitialSampler, LogWeight, ModelParams};
use crate::rng::{Domain, StreamFactory};
use crate::stats::Moments;

pub const DEFAULT_POOL_SIZE: usize = 100_000;
pub const DEFAULT_LEVELS: usize = 30;

/// Entries handed to one rayon task at a time.
const PAR_CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct Population {
    pub level: usize,
    pub pool: Vec<LogWeight>,
    pub params: ModelParams,
    pub law: DisorderLaw,
    pub seed: u64,
    streams: StreamFactory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyEstimate {
    /// Pool mean of `log R_N`, divided by `s^N`.
    pub mean: f64,
    /// Pool standard deviation over `sqrt(M) s^N`; ignores the correlations
    /// the pool itself induces.
    pub std_err: f64,
    pub level: usize,
    pub pool_size: usize,
    pub beta: f64,
    pub h: f64,
}

impl FreeEnergyEstimate {
    /// The quenched estimate is significantly above `threshold`.
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.mean > threshold + 3.0 * self.std_err
    }
}

pub fn init_population(
    params: &ModelParams,
    law: &DisorderLaw,
    m: usize,
    seed: u64,
) -> Result<Population> {
    if m < 2 {
        return Err(Error::InvalidParams(format!(
            "pool size must be >= 2, got {m}"
        )));
    }
    let sampler = InitialSampler::new(law, params)?;
    let streams = StreamFactory::new(seed);
    let pool = (0..m)
        .into_par_iter()
        .with_min_len(PAR_CHUNK)
        .map(|i| sampler.sample(&mut streams.stream(Domain::Initial, 0, i as u64)))
        .collect();
    Ok(Population {
        level: 0,
        pool,
        params: *params,
        law: law.clone(),
        seed,
        streams,
    })
}

pub fn population_step(pop: &Population) -> Population {
    let next_level = pop.level + 1;
    let m = pop.pool.len();
    let (s, b) = (pop.params.s, pop.params.b);
    let old = &pop.pool;
    let pool = (0..m)
        .into_par_iter()
        .with_min_len(PAR_CHUNK)
        .map(|i| {
            let mut rng = pop
                .streams
                .stream(Domain::Parents, next_level as u64, i as u64);
            let sum: f64 = (0..s).map(|_| old[rng.random_range(0..m)].0).sum();
            LogWeight(branch_average(sum, b))
        })
        .collect();
    Population {
        level: next_level,
        pool,
        params: pop.params,
        law: pop.law.clone(),
        seed: pop.seed,
        streams: pop.streams.clone(),
    }
}

impl Population {
    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn step(&self) -> Population {
        population_step(self)
    }

    pub fn evolve(mut self, levels: usize) -> Population {
        for _ in 0..levels {
            self = population_step(&self);
        }
        self
    }

    pub fn estimate(&self) -> FreeEnergyEstimate {
        let stats: Moments = self.pool.iter().map(|w| w.0).collect();
        let scale = (self.params.s as f64).powi(self.level as i32);
        let m = self.pool.len();
        FreeEnergyEstimate {
            mean: stats.mean() / scale,
            std_err: stats.std_dev() / ((m as f64).sqrt() * scale),
            level: self.level,
            pool_size: m,
            beta: self.params.beta,
            h: self.params.h,
        }
    }
}

pub fn quenched_free_energy(
    params: &ModelParams,
    law: &DisorderLaw,
    m: usize,
    levels: usize,
    seed: u64,
) -> Result<FreeEnergyEstimate> {
    if levels < 1 {
        return Err(Error::InvalidParams("need at least one level".into()));
    }
    Ok(init_population(params, law, m, seed)?
        .evolve(levels)
        .estimate())
}

/// Inputs of [`critical_point_scan`] other than the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    pub pool_size: usize,
    pub levels: usize,
    pub seed: u64,
    pub h_lo: f64,
    pub h_hi: f64,
    pub threshold: f64,
    pub iterations: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            pool_size: DEFAULT_POOL_SIZE,
            levels: DEFAULT_LEVELS,
            seed: 0,
            h_lo: 0.0,
            h_hi: 1.0,
            threshold: 1e-6,
            iterations: 30,
        }
    }
}

/// Bisection in `h` for the point where the finite-size quenched estimate
/// first exceeds `threshold` by three standard errors. Returns the final
/// midpoint, a pseudo-critical point for the given pool size and depth.
///
/// `params.h` is ignored.
pub fn critical_point_scan(
    params: &ModelParams,
    law: &DisorderLaw,
    cfg: &ScanSettings,
) -> Result<f64> {
    if !(cfg.h_lo < cfg.h_hi) {
        return Err(Error::InvalidParams(format!(
            "need h_lo < h_hi, got [{}, {}]",
            cfg.h_lo, cfg.h_hi
        )));
    }
    if !(cfg.threshold > 0.0) {
        return Err(Error::InvalidParams("threshold must be > 0".into()));
    }
    let above = |h: f64| -> Result<bool> {
        let est =
            quenched_free_energy(&params.with_h(h), law, cfg.pool_size, cfg.levels, cfg.seed)?;
        Ok(est.exceeds(cfg.threshold))
    };
    if above(cfg.h_lo)? {
        return Err(Error::Bracket(format!(
            "estimate already above threshold at h_lo = {}",
            cfg.h_lo
        )));
    }
    if !above(cfg.h_hi)? {
        return Err(Error::Bracket(format!(
            "estimate still below threshold at h_hi = {}",
            cfg.h_hi
        )));
    }
    let (mut lo, mut hi) = (cfg.h_lo, cfg.h_hi);
    for _ in 0..cfg.iterations {
        let mid = 0.5 * (lo + hi);
        if above(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
