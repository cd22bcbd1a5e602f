//! Monte Carlo `Y_0` against the finite-difference `u(0, x0)` for the same
//! problem.

use singular_bsde::pde::{fk_cross_validate, Boundary, PdeGrid, SdeCoefficients};
use singular_bsde::problems::catalog;
use singular_bsde::solver::{SolveMode, SolverConfig};
use singular_bsde::stochastic::RegressionBasis;

fn main() -> singular_bsde::Result<()> {
    let n_paths: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let grid = PdeGrid::new(-6.0, 6.0, 400, 400, 1.0, Boundary::LogLinear)?;
    let mc = SolverConfig::new(64, n_paths)
        .with_basis(RegressionBasis::local(40, 2))
        .with_mode(SolveMode::Direct);
    for id in [
        "martingale:sigma=1",
        "delta-power:delta=0.5,sigma=1",
        "delta-power:delta=1,sigma=1",
    ] {
        for x0 in [-0.5, 0.0, 0.5] {
            let r = fk_cross_validate(
                &catalog(id, 1.0)?.problem,
                &SdeCoefficients::brownian(1.0),
                &grid,
                &mc,
                x0,
            )?;
            println!(
                "{id:<30} x0={x0:+.1}  pde {:.5}  mc {:.5} ± {:.5}  gap {:.2e} / tol {:.2e} {}",
                r.u_pde,
                r.y0_mc,
                r.mc_stderr,
                r.discrepancy,
                r.tolerance,
                if r.pass { "ok" } else { "MISMATCH" }
            );
        }
    }
    Ok(())
}
