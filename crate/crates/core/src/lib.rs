// NaN-rejecting checks are written as negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod entropy;
pub mod error;
pub mod flows;
pub mod functionals;
pub mod geometry;
pub mod grids;
pub mod harmonics;
pub mod minimize;
pub mod optimizers;
pub mod stability;

pub use error::{Error, ErrorKind, Result};
