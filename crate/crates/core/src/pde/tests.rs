use super::*;
use crate::problems::{oracle_delta, BsdeProblem, GeneratorSpec, StateLaw, TerminalSpec};
use crate::solver::SolverConfig;

fn heat_grid(n: usize, boundary: Boundary) -> PdeGrid {
    PdeGrid::new(-6.0, 6.0, n, n, 1.0, boundary).unwrap()
}

fn max_rel_error(sol: &PdeSolution, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = &sol.grid;
    let mut e = 0.0f64;
    for k in 0..=g.n_t {
        for j in 1..g.n_x {
            let v = exact(g.t(k), g.x(j));
            e = e.max((sol.at(k, j) - v).abs() / v);
        }
    }
    e
}

#[test]
fn heat_equation_closed_form() {
    let exact = |t: f64, x: f64| (x + 0.5 * (1.0 - t)).exp();
    let coeffs = SdeCoefficients::brownian(1.0);
    for boundary in [Boundary::LogLinear, Boundary::Dirichlet(std::sync::Arc::new(exact))] {
        let sol = solve_semilinear(
            &GeneratorSpec::zero(),
            &TerminalSpec::lognormal(1.0, 0.0),
            &coeffs,
            &heat_grid(400, boundary),
            1e-6,
        )
        .unwrap();
        let e = max_rel_error(&sol, exact);
        assert!(e < 1e-3, "{e}");
    }
}

#[test]
fn singular_closed_form_and_growth() {
    let xi = TerminalSpec::lognormal(1.0, 0.0);
    let (problem, oracle) = oracle_delta(1.0, &xi, StateLaw::brownian(1.0)).unwrap();
    let coeffs = SdeCoefficients::brownian(1.0);
    let sol = solve_semilinear(
        &problem.generator,
        &xi,
        &coeffs,
        &heat_grid(400, Boundary::LogLinear),
        1e-6,
    )
    .unwrap();
    let e = max_rel_error(&sol, |t, x| oracle.y(t, &[x]));
    assert!(e < 1e-3, "{e}");
    assert!((oracle.y(0.5, &[0.3]) - 0.8f64.exp()).abs() < 1e-12);
    // C·e^{C|x|} ≥ e^{x+1} at x = 0 needs C ≥ e
    assert!(growth_check(&sol, 3.0, 1.0));
    assert!(!growth_check(&sol, 2.0, 1.0));
    assert!(!growth_check(&sol, 0.5, 1.0));
    let (c, q) = sol.growth_params;
    assert_eq!(q, 1.0);
    assert!(growth_check(&sol, c, 1.0) && (c - 1f64.exp()).abs() < 1e-3, "{c}");
}

#[test]
fn terminal_layer_is_exact_and_constants_stay() {
    let psi = TerminalSpec::constant(3.0);
    let sol = solve_semilinear(
        &GeneratorSpec::zero(),
        &psi,
        &SdeCoefficients::brownian(0.7),
        &heat_grid(32, Boundary::LogLinear),
        1e-6,
    )
    .unwrap();
    assert!(sol.u.iter().all(|&v| (v - 3.0).abs() <= 1e-13));
    assert!(growth_check(&sol, 3.0 + 1e-12, 1.0));
    let xi = TerminalSpec::lognormal(1.0, 0.0);
    let sol = solve_semilinear(
        &GeneratorSpec::zero(),
        &xi,
        &SdeCoefficients::brownian(1.0),
        &heat_grid(32, Boundary::LogLinear),
        1e-6,
    )
    .unwrap();
    for j in 0..=32 {
        assert_eq!(sol.at(32, j).to_bits(), xi.eval(&[sol.grid.x(j)]).to_bits());
    }
}

#[test]
fn refinement_order_at_least_one() {
    let exact = |t: f64, x: f64| (x + 0.5 * (1.0 - t)).exp();
    let errs: Vec<f64> = [50, 100, 200]
        .iter()
        .map(|&n| {
            let sol = solve_semilinear(
                &GeneratorSpec::zero(),
                &TerminalSpec::lognormal(1.0, 0.0),
                &SdeCoefficients::brownian(1.0),
                &heat_grid(n, Boundary::LogLinear),
                1e-6,
            )
            .unwrap();
            max_rel_error(&sol, exact)
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "{errs:?}");
    }
}

#[test]
fn comparison_in_terminal_data() {
    let coeffs = SdeCoefficients::new("ou", |_, x| -0.5 * x, |_, x| 0.5 + 0.1 * x.sin(), 1.0);
    let gen = GeneratorSpec::linear(0.2, 0.1);
    let lo = TerminalSpec::custom("lo", |x| 1.0 + x[0].abs().min(2.0), Some(1.0));
    let hi = TerminalSpec::custom("hi", |x| 1.2 + x[0].abs().min(2.5), Some(1.2));
    let g = heat_grid(64, Boundary::LogLinear);
    let a = solve_semilinear(&gen, &lo, &coeffs, &g, 1e-6).unwrap();
    let b = solve_semilinear(&gen, &hi, &coeffs, &g, 1e-6).unwrap();
    assert!(a.u.iter().zip(&b.u).all(|(u, v)| *u <= v + 1e-10));
}

#[test]
fn rejects_bad_grids_and_blowup() {
    assert!(PdeGrid::new(1.0, 0.0, 32, 32, 1.0, Boundary::LogLinear).is_err());
    assert!(PdeGrid::new(0.0, 1.0, 8, 32, 1.0, Boundary::LogLinear).is_err());
    // explicit f = 1e6·u is far beyond the stable step
    let gen = GeneratorSpec::custom("stiff", |_, _, y, _| 1e6 * y);
    let err = solve_semilinear(
        &gen,
        &TerminalSpec::constant(1.0),
        &SdeCoefficients::brownian(1.0),
        &heat_grid(16, Boundary::LogLinear),
        1e-6,
    );
    assert!(matches!(err, Err(crate::Error::Numerical { .. })), "{err:?}");
    // explicit f = −1e3·u drives u negative
    let gen = GeneratorSpec::custom("sink", |_, _, y, _| -1e3 * y);
    let err = solve_semilinear(
        &gen,
        &TerminalSpec::constant(1.0),
        &SdeCoefficients::brownian(1.0),
        &heat_grid(16, Boundary::LogLinear),
        1e-6,
    );
    assert!(format!("{}", err.unwrap_err()).contains("positivity"));
}

#[test]
fn fk_constant_terminal_agrees_exactly() {
    let problem = BsdeProblem::new(GeneratorSpec::zero(), TerminalSpec::constant(2.0), 1).unwrap();
    let grid = heat_grid(32, Boundary::LogLinear);
    let mc = SolverConfig::new(8, 100);
    let r = fk_cross_validate(&problem, &SdeCoefficients::brownian(1.0), &grid, &mc, 0.0).unwrap();
    assert!(r.discrepancy < 1e-12 && r.pass, "{r:?}");
    assert!(fk_cross_validate(&problem, &SdeCoefficients::brownian(1.0), &grid, &mc, 7.0).is_err());
}

#[test]
fn uniqueness_probe_heat_and_constant() {
    let coeffs = SdeCoefficients::brownian(1.0);
    let exact = |t: f64, x: f64| (x + 0.5 * (1.0 - t)).exp();
    let grids = probe_grids(
        &heat_grid(100, Boundary::LogLinear),
        Boundary::Dirichlet(std::sync::Arc::new(exact)),
        2,
    );
    let r = uniqueness_probe(
        &GeneratorSpec::zero(),
        &TerminalSpec::lognormal(1.0, 0.0),
        &coeffs,
        &grids,
        1e-6,
    )
    .unwrap();
    assert_eq!(r.pairs.len(), 6);
    assert!(r.max_discrepancy < 1e-2, "{r:?}");
    let flat = probe_grids(
        &heat_grid(100, Boundary::LogLinear),
        Boundary::Dirichlet(std::sync::Arc::new(|_, _| 1.5)),
        2,
    );
    let c = uniqueness_probe(
        &GeneratorSpec::zero(),
        &TerminalSpec::constant(1.5),
        &coeffs,
        &flat,
        1e-6,
    )
    .unwrap();
    assert!(c.max_discrepancy < 1e-12);
    assert!(uniqueness_probe(
        &GeneratorSpec::zero(),
        &TerminalSpec::constant(1.5),
        &coeffs,
        &grids[..1],
        1e-6
    )
    .is_err());
}
