//! Time grids, Brownian ensembles and the least-squares regression engine.

mod ensemble;
mod field;
mod grid;
mod moments;
mod regression;

pub use ensemble::{sample_brownian, PathEnsemble};
pub use field::PathField;
pub use grid::TimeGrid;
pub use moments::empirical_sup_moment;
pub use regression::{conditional_expectation, BasisKind, FittedFunction, Projector, RegressionBasis, RIDGE_SCALE};
