//! Heterogeneous treatment effect estimation for censored survival outcomes,
//! combining a randomized trial with real-world data.

pub mod data;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod linalg;
pub mod nuisance;
pub mod penalty;
pub mod rng;
pub mod simulation;
pub mod solver;
pub mod stute;
pub mod tuning;

pub use error::{Error, Result};
