//! Finite differences for the semilinear parabolic equation attached to a
//! Markovian BSDE, and its Monte Carlo cross-check.

mod probe;
mod scheme;

pub use crate::problems::SdeCoefficients;
pub use probe::{
    fk_cross_validate, probe_grids, uniqueness_probe, FkReport, PairDiscrepancy, ProbeCase, UniquenessReport,
};
pub use scheme::{growth_check, solve_semilinear, Boundary, BoundaryFn, PdeGrid, PdeSolution};

#[cfg(test)]
mod tests;
