//! Moment-estimate ratio and the BMO proxy of `Z`, the two a priori
//! bounds that can be evaluated on a finished solve.

use singular_bsde::problems::{catalog, BsdeProblem, Envelope, GeneratorSpec, TerminalSpec};
use singular_bsde::solver::{estimate_bmo_proxy, moment_estimate_check, solve, SolveMode, SolverConfig};
use singular_bsde::stochastic::{PathEnsemble, RegressionBasis, TimeGrid};

fn main() -> singular_bsde::Result<()> {
    let np = 20_000;
    let basis = RegressionBasis::local(20, 2);

    let paths = PathEnsemble::sample(&TimeGrid::new(1.0, 32)?, 1, np, 1)?;
    let cfg = SolverConfig::new(32, np)
        .with_basis(basis.clone())
        .with_mode(SolveMode::Direct);
    for id in [
        "martingale:sigma=1",
        "delta-power:delta=0.5,sigma=1",
        "linear:a=0.5,b=0.5,sigma=1",
    ] {
        let problem = catalog(id, 1.0)?.problem;
        let sol = solve(&problem, &paths, &cfg)?;
        let env = problem
            .generator
            .power_envelope()
            .cloned()
            .unwrap_or(Envelope::singular(0.0));
        let xi: Vec<f64> = paths
            .positions()
            .at(32)
            .iter()
            .map(|&w| problem.terminal.eval(&[w]))
            .collect();
        let m = moment_estimate_check(&sol, 1.5, &env, &xi)?;
        println!("{id:<30} lhs {:.3e} rhs {:.3e} ratio {:.4}", m.lhs, m.rhs, m.ratio);
    }

    // bounded terminal: the proxy should settle as the grid is refined
    let xi = TerminalSpec::custom(
        "clamp(e^W, 1/3, 3)",
        |x| x[0].exp().clamp(1.0 / 3.0, 3.0),
        Some(1.0 / 3.0),
    );
    let problem = BsdeProblem::new(GeneratorSpec::singular(1.0), xi, 1)?;
    for n in [32, 64, 128] {
        let paths = PathEnsemble::sample(&TimeGrid::new(1.0, n)?, 1, np, 1)?;
        let cfg = SolverConfig::new(n, np)
            .with_basis(basis.clone())
            .with_mode(SolveMode::Direct);
        let sol = solve(&problem, &paths, &cfg)?;
        println!("n_steps={n:<4} BMO proxy {:.5}", estimate_bmo_proxy(&sol, &basis)?);
    }
    Ok(())
}
