//! Divisor-function exponential sums and the approximate functional equation.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afe;
pub mod arithmetic;
pub mod dd;
pub mod error;
pub mod expsum;
pub mod farey;
pub mod oscint;
pub mod summation;
pub mod voronoi;

pub use error::{Error, Result};
