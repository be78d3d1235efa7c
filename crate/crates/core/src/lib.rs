//! Finite-blocklength source coding and intrinsic randomness.
//!
//! All quantities are in nats. Product sources are handled through exact
//! type-class tables, so block lengths in the tens of thousands are cheap for
//! small alphabets.

pub mod cli;
pub mod coding;
pub mod dist;
pub mod error;
mod linalg;
pub mod logspace;
mod optimize;
pub mod randomness;
pub mod sources;
pub mod spectrum;
pub mod tradeoff;
pub mod universal;

pub use dist::FiniteDistribution;
pub use error::{Error, Result};
pub use logspace::LogWeight;
pub use sources::{ExplicitSource, MarkovSource, TypeClassTable};
