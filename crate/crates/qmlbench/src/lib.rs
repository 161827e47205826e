//! Benchmark suite comparing quantum-kernel and variational quantum
//! classifiers against classical kernel SVMs on synthetic grids, UCI
//! baselines, county-level COVID labels, and Anderson-localization phase
//! maps, all on a deterministic statevector simulator.

pub mod anderson;
pub mod bench;
pub mod classifier;
pub mod data;
pub mod dataset;
pub mod error;
pub mod qkernel;
pub mod qsim;
pub mod rng;
pub mod svm;
pub mod vqc;

pub use dataset::Dataset;
pub use error::{Error, Result};
