//! Multifractal products of geometric Ornstein-Uhlenbeck type processes.
//!
//! The mother process is `Lambda(t) = exp(X(t) - c_X)` where `X` is a
//! stationary OU-type process with a self-decomposable marginal. A cascade
//! multiplies rescaled independent copies `Lambda^(i)(t b^i)` and integrates
//! the product; the crate simulates these cascades, evaluates their Rényi
//! functions in closed form and estimates scaling exponents from paths.

pub mod cascade;
pub mod error;
pub mod estimate;
pub mod marginals;
pub mod ou_paths;
pub mod quad;
pub mod renyi;
pub mod rng;

pub use error::{Error, Result};
