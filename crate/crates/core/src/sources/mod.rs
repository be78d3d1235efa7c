//! Source models and their exact n-fold structure.
//!
//! i.i.d. sources are represented by [`TypeClassTable`]s. Markov sources feed
//! the moment oracle and the Gaussian-limit predictions only.

mod cache;
mod explicit;
mod markov;
mod types;

pub use cache::{load_or_build, load_table, store_table, table_key, CACHE_VERSION};
pub use explicit::ExplicitSource;
pub use markov::{
    markov_entropy_rate, markov_loglik_moments, markov_psi, markov_stationary, markov_varentropy,
    markov_varentropy_lag1, MarkovSource,
};
pub use types::{composition_count, Compositions, TypeClass, TypeClassTable, DEFAULT_CLASS_CAP};
pub(crate) use types::{type_count, LnFactorial};
