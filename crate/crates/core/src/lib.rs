//! Monte Carlo and finite-difference solvers for one-dimensional quadratic
//! BSDEs whose generators are singular at `y = 0`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod finance;
pub mod pde;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod stochastic;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
