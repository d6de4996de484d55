//! Simulator and experiment harness for bandit-based cross-project defect
//! prediction with re-prediction and retesting of modules predicted
//! non-defective.
//!
//! Pipeline: [`dataset`] loads or synthesizes CK-metric projects,
//! [`learner`] trains one logistic model per learning project, [`simulator`]
//! runs the bandit-driven testing pass, [`reprediction`] applies retest
//! passes to a copy of that trace, and [`evaluation`] compares the
//! approaches. [`experiment`] drives the full matrix.

pub mod auc;
pub mod bandit;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod learner;
pub mod reprediction;
pub mod rng;
pub mod selftest;
pub mod simulator;

pub use error::{Error, Result};
