//! Monte Carlo and asymptotic toolkit for finite-time ruin of renewal risk
//! models with heavy-tailed, dependent claims.

pub mod asymptotics;
pub mod dependence;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod heavy_tails;
pub mod processes;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use heavy_tails::{ClassTag, ClassTags, Family, TailModel};
