//! Stochastic domination toolkit for arrays of random variables: dominating
//! laws, moment transfer, limit-theorem hypotheses and Monte Carlo checks of
//! weak and strong laws of large numbers.

pub mod checks;
pub mod conditions;
pub mod domination;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod gate;
pub mod json;
pub mod moments;
pub mod model;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod svf;

pub use error::{Error, Result};
pub use exec::Execution;
pub use gate::Verdict;
