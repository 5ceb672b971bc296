//! Dynamic nonnegative matrix factorization.

pub mod cli;
pub mod dsp;
pub mod dynamic;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod plca;

pub use error::{Error, Result};
pub use matrix::{is_divergence, NonnegMatrix, StochasticMatrix, EPS};
