use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::BsdeProblem;
use crate::stochastic::RegressionBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    /// Solve the singular equation as given (Picard + positivity floor).
    Direct,
    /// Desingularize with the power transform, solve, map back.
    Transform,
    /// Transform for envelope-exact singular generators, direct otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    #[serde(default = "defaults::basis")]
    pub basis: RegressionBasis,
    #[serde(default = "defaults::picard_iters")]
    pub picard_iters: usize,
    #[serde(default = "defaults::picard_tol")]
    pub picard_tol: f64,
    /// Positivity floor `ε`; defaults to `1e-6·c` (declared terminal lower
    /// bound `c`) or `1e-6`.
    #[serde(default)]
    pub y_floor: Option<f64>,
    #[serde(default = "defaults::mode")]
    pub mode: SolveMode,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    use super::*;
    pub fn horizon() -> f64 {
        1.0
    }
    pub fn basis() -> RegressionBasis {
        RegressionBasis::polynomial(4)
    }
    pub fn picard_iters() -> usize {
        10
    }
    pub fn picard_tol() -> f64 {
        1e-10
    }
    pub fn mode() -> SolveMode {
        SolveMode::Auto
    }
}

impl SolverConfig {
    pub fn new(n_steps: usize, n_paths: usize) -> Self {
        Self {
            horizon: defaults::horizon(),
            n_steps,
            n_paths,
            basis: defaults::basis(),
            picard_iters: defaults::picard_iters(),
            picard_tol: defaults::picard_tol(),
            y_floor: None,
            mode: defaults::mode(),
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_basis(mut self, basis: RegressionBasis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::invalid(format!(
                "n_paths < 2 (got {}): regression needs at least two paths",
                self.n_paths
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be >= 1"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.picard_iters == 0 {
            return Err(Error::invalid("picard_iters must be >= 1"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::invalid("picard_tol must be positive"));
        }
        if let Some(eps) = self.y_floor {
            if !(eps > 0.0) {
                return Err(Error::invalid("y_floor must be positive"));
            }
        }
        self.basis.validate()
    }

    /// Effective floor for a problem; rejects a floor that would bind the
    /// declared lower bound of the terminal.
    pub fn floor_for(&self, problem: &BsdeProblem) -> Result<f64> {
        let c = problem.terminal.lower_bound();
        let eps = self.y_floor.unwrap_or(1e-6 * c.unwrap_or(1.0));
        if let Some(c) = c {
            if eps >= c {
                return Err(Error::invalid(format!(
                    "y_floor {eps} must lie below the terminal lower bound {c}"
                )));
            }
        }
        Ok(eps)
    }
}
