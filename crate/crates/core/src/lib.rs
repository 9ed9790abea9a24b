#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod covering;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod kernels;
pub mod montecarlo;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod verify;
