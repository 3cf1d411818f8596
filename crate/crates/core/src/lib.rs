//! Adaptive mini-batch size SGD for strongly convex finite sums.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod linalg;
pub mod objective;
pub mod optimizer;
pub mod sampling;
pub mod synthetic;
pub mod theory;
