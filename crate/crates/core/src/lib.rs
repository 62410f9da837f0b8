// `!(x > 0.0)` is the NaN-rejecting form of the checks throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod distfn;
pub mod error;
pub mod linalg;
pub mod models;
pub mod montecarlo;
pub mod procedures;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
