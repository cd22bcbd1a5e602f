//! Backward least-squares Monte Carlo for `Y_t = ξ + ∫_t^T f(s, X_s, Y_s, Z_s) ds − ∫_t^T Z_s dW_s`.

mod backward;
mod config;
mod estimates;

pub use backward::{
    batch_stderr, resolve_mode, simulate_state, solve, solve_backward, solve_via_transform, BackwardSolution,
    Diagnostics, StepModel,
};
pub(crate) use backward::{mean, sample_sd};
pub use config::{SolveMode, SolverConfig};
pub use estimates::{estimate_bmo_proxy, moment_estimate_check, MomentCheck};

#[cfg(test)]
mod tests;
