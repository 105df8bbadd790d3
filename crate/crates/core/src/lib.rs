//! Pool-based multi-objective Bayesian optimization over sparse count
//! fingerprints.
//!
//! The crate is organised bottom-up:
//!
//! * [`fingerprint`]: count fingerprints, MinMax/Tanimoto kernels and distances.
//! * [`gp`]: exact GP regression with fixed hyperparameters, one model per objective.
//! * [`pareto`]: dominance, non-dominated filtering, exact and Monte-Carlo hypervolume.
//! * [`acquisition`]: Monte-Carlo EHVI, scalarized EI and a random baseline.
//! * [`metrics`]: HV curves, R2 indicator, #Circles and effect sizes.
//! * [`engine`]: the seeded optimization loop and multi-seed suites.
//! * [`dataset`] / [`report`]: dataset files, synthetic tasks, logs and summaries.
//! * [`cli`]: the `mobo` command line.

pub mod acquisition;
pub mod cli;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod fingerprint;
pub mod gp;
pub mod metrics;
pub mod pareto;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
