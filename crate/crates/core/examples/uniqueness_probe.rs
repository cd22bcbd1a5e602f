//! Two boundary policies at four resolutions for the δ = 1 singular PDE;
//! all solutions should collapse onto one function as the grid refines.

use singular_bsde::pde::{probe_grids, uniqueness_probe, Boundary, PdeGrid, SdeCoefficients};
use singular_bsde::problems::{oracle_delta, StateLaw, TerminalSpec};

fn main() -> singular_bsde::Result<()> {
    let psi = TerminalSpec::lognormal(1.0, 0.0);
    let (problem, exact) = oracle_delta(1.0, &psi, StateLaw::brownian(1.0))?;
    let base = PdeGrid::new(-6.0, 6.0, 50, 50, 1.0, Boundary::LogLinear)?;
    let grids = probe_grids(&base, Boundary::from_oracle(&exact), 4);
    let r = uniqueness_probe(&problem.generator, &psi, &SdeCoefficients::brownian(1.0), &grids, 1e-6)?;
    for (k, c) in r.cases.iter().enumerate() {
        println!("case {k}: {:<12} {}x{}", c.boundary, c.n_x, c.n_t);
    }
    for b in ["dirichlet", "log-linear"] {
        println!("{b:<12} consecutive-resolution gaps {}", sci(&r.refinement_sequence(b)));
    }
    for (level, gap) in r.policy_gaps() {
        println!("policy gap at {level}x{level}: {gap:.3e}");
    }
    println!("largest pairwise discrepancy {:.3e}", r.max_discrepancy);
    Ok(())
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}
