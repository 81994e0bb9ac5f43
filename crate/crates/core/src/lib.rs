// Index loops mirror the tensor notation; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl)]

pub mod asymptotics;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod scenario;
pub mod solver;
pub mod spinor;

pub use error::{Error, Result};
