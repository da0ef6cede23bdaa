//! Numerics for the hierarchical pinning model on diamond lattices with
//! bond disorder.
//!
//! * [`model`]: parameters, disorder laws, the log-space renormalization map.
//! * [`annealed`]: the deterministic annealed recursion and its free energy.
//! * [`population`]: population-dynamics estimates of the quenched free energy.
//! * [`walk`]: wall-avoidance and crossing probabilities of the uniform walk.
//! * [`certificate`]: the good-diamond lower bound on the quenched free energy.
//! * [`lattice`]: brute-force enumeration on small diamond lattices.
//! * [`record`]: flat result records and their CSV/JSON export.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annealed;
pub mod certificate;
pub mod error;
pub mod lattice;
pub mod model;
pub mod population;
pub mod record;
pub mod rng;
pub mod stats;
pub mod walk;

pub use annealed::{
    annealed_free_energy, annealed_partial, annealed_step, build_epsilon_sequence, fit_singularity,
    AnnealedState, EpsilonSequence, FreeEnergyValue, Phase, SingularityFit,
};
pub use certificate::Certificate;
pub use error::{Error, Result};
pub use lattice::DiamondLattice;
pub use model::{
    combine_children, log_m, sample_initial, DisorderLaw, LogWeight, ModelParams, Regime,
};
pub use population::{FreeEnergyEstimate, Population};
pub use record::{RecordTable, ResultRecord, Value};
pub use walk::WalkTables;

/// Crate version, written into every exported record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
