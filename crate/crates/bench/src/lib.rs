//! Fixtures shared by the benchmarks.

use hierpin_core::population::{init_population, Population};
use hierpin_core::{DisorderLaw, LogWeight, ModelParams};

pub fn params(beta: f64, h: f64) -> ModelParams {
    ModelParams::new(2, 2, beta, h).expect("valid parameters")
}

/// A Gaussian pool a few levels in, so entries are no longer two-valued.
pub fn warm_population(m: usize) -> Population {
    init_population(&params(1.0, 0.3), &DisorderLaw::StandardGaussian, m, 7)
        .expect("pool size >= 2")
        .evolve(3)
}

/// Deterministic child weights spread over both branches of the map.
pub fn children(count: usize) -> Vec<LogWeight> {
    (0..count)
        .map(|i| LogWeight(((i * 37) % 101) as f64 / 10.0 - 5.0))
        .collect()
}
