//! Terminal perturbations `ξ(1 + 1/n)`: sup-norm errors against the
//! unperturbed solve shrink as `n` grows.

use singular_bsde::problems::catalog;
use singular_bsde::solver::{SolveMode, SolverConfig};
use singular_bsde::stochastic::{PathEnsemble, RegressionBasis, TimeGrid};
use singular_bsde::verify::{stability_battery, PerturbationSequence};

fn main() -> singular_bsde::Result<()> {
    let (n, np) = (32, 20_000);
    let paths = PathEnsemble::sample(&TimeGrid::new(1.0, n)?, 1, np, 1)?;
    let cfg = SolverConfig::new(n, np)
        .with_basis(RegressionBasis::local(20, 2))
        .with_mode(SolveMode::Direct);
    for id in ["delta-power:delta=0.5,sigma=1", "delta-power:delta=2,sigma=1"] {
        let seq = PerturbationSequence::scaled_terminals(&catalog(id, 1.0)?.problem, &[2, 4, 8, 16, 32]);
        let r = stability_battery(&seq, &paths, &cfg)?;
        println!("{id}");
        println!("  Y errors {}", sci(&r.errors));
        if let Some(z) = &r.z_errors {
            println!("  Z errors {}", sci(z));
        }
        println!("  monotone {} contraction {:.4}", r.monotone, r.contraction);
    }
    Ok(())
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}
