use super::*;
use crate::problems::{oracle_delta, oracle_linear, BsdeProblem, Envelope, GeneratorSpec, StateLaw, TerminalSpec};
use crate::stochastic::{PathEnsemble, RegressionBasis, TimeGrid};
use crate::Error;

fn ensemble(n_steps: usize, n_paths: usize, seed: u64) -> PathEnsemble {
    PathEnsemble::sample(&TimeGrid::new(1.0, n_steps).unwrap(), 1, n_paths, seed).unwrap()
}

fn martingale(xi: TerminalSpec) -> BsdeProblem {
    BsdeProblem::new(GeneratorSpec::zero(), xi, 1).unwrap()
}

#[test]
fn martingale_lognormal_mean() {
    let paths = ensemble(16, 40_000, 3);
    let cfg = SolverConfig::new(16, 40_000);
    let sol = solve(&martingale(TerminalSpec::lognormal(1.0, 0.0)), &paths, &cfg).unwrap();
    let exact = 0.5f64.exp();
    assert!(
        (sol.y0 - exact).abs() < 4.0 * sol.y0_stderr,
        "{} vs {exact} ± {}",
        sol.y0,
        sol.y0_stderr
    );
    assert_eq!(sol.mode, SolveMode::Direct);
}

#[test]
fn linear_ode_is_integrated() {
    let law = StateLaw::brownian(1.0);
    let (problem, oracle) = oracle_linear(1.0, 0.0, &TerminalSpec::constant(0.0), law).unwrap();
    let paths = ensemble(32, 200, 1);
    let sol = solve(&problem, &paths, &SolverConfig::new(32, 200)).unwrap();
    assert!((sol.y0 - oracle.y(0.0, &[0.0])).abs() < 1e-12);
    assert_eq!(sol.y0_stderr, 0.0);

    // with growth the implicit Euler error is O(Δt)
    let (problem, oracle) = oracle_linear(0.5, 1.0, &TerminalSpec::constant(1.0), law).unwrap();
    let exact = oracle.y(0.0, &[0.0]);
    let err = |n: usize| {
        let paths = ensemble(n, 200, 1);
        (solve(&problem, &paths, &SolverConfig::new(n, 200)).unwrap().y0 - exact).abs()
    };
    let (e1, e2) = (err(32), err(64));
    assert!(e1 < exact / 32.0, "{e1}");
    assert!((e1 / e2 - 2.0).abs() < 0.1, "{e1} {e2}");
}

#[test]
fn terminal_row_is_exact() {
    let xi = TerminalSpec::lognormal(1.0, 0.0);
    let (problem, _) = oracle_delta(1.0, &xi, StateLaw::brownian(1.0)).unwrap();
    let paths = ensemble(8, 500, 2);
    for mode in [SolveMode::Direct, SolveMode::Transform] {
        let sol = solve(&problem, &paths, &SolverConfig::new(8, 500).with_mode(mode)).unwrap();
        for p in 0..500 {
            let w = paths.w(p, 8, 0);
            assert_eq!(sol.y.get(p, 8, 0).to_bits(), xi.eval(&[w]).to_bits());
        }
    }
}

#[test]
fn delta_oracle_both_modes() {
    let xi = TerminalSpec::lognormal(1.0, 0.0);
    let (problem, oracle) = oracle_delta(1.0, &xi, StateLaw::brownian(1.0)).unwrap();
    let exact = oracle.y(0.0, &[0.0]);
    assert!((exact - 1f64.exp()).abs() < 1e-12);
    let paths = ensemble(32, 20_000, 5);
    let cfg = SolverConfig::new(32, 20_000);
    let t = solve(&problem, &paths, &cfg.clone().with_mode(SolveMode::Transform)).unwrap();
    let d = solve(&problem, &paths, &cfg.with_mode(SolveMode::Direct)).unwrap();
    assert!(t.y0_stderr > 0.0);
    assert!((t.y0 / exact - 1.0).abs() < 0.04, "transform {}", t.y0);
    assert!((d.y0 / exact - 1.0).abs() < 0.04, "direct {}", d.y0);
    assert_eq!(d.diagnostics.floor_activations, 0);
    assert!(d.y.iter().all(|&v| v >= cfg_floor(&problem)));
}

fn cfg_floor(problem: &BsdeProblem) -> f64 {
    SolverConfig::new(1, 2).floor_for(problem).unwrap()
}

#[test]
fn auto_mode_routes_pure_singular_to_transform() {
    let (problem, _) = oracle_delta(0.5, &TerminalSpec::lognormal(0.5, 0.0), StateLaw::brownian(1.0)).unwrap();
    assert_eq!(resolve_mode(&problem, SolveMode::Auto), SolveMode::Transform);
    assert_eq!(
        resolve_mode(&martingale(TerminalSpec::constant(1.0)), SolveMode::Auto),
        SolveMode::Direct
    );
}

#[test]
fn zero_delta_transform_is_a_shift() {
    let xi = TerminalSpec::lognormal(0.5, 0.0);
    let problem = BsdeProblem::new(GeneratorSpec::from_envelope(Envelope::new(0.3, 0.0, 0.0, 0.0)), xi, 1).unwrap();
    let paths = ensemble(8, 2_000, 9);
    let cfg = SolverConfig::new(8, 2_000);
    let t = solve_via_transform(&problem, &paths, &cfg).unwrap();
    let d = solve_backward(&problem, &paths, &cfg).unwrap();
    for (a, b) in t.y.iter().zip(d.y.iter()) {
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }
}

#[test]
fn nan_is_reported_with_step() {
    let gen = GeneratorSpec::custom("bad", |t, _, _, _| if t < 0.3 { f64::NAN } else { 0.0 });
    let problem = BsdeProblem::new(gen, TerminalSpec::constant(1.0), 1).unwrap();
    let paths = ensemble(10, 50, 1);
    match solve_backward(&problem, &paths, &SolverConfig::new(10, 50)) {
        Err(Error::Numerical { step, .. }) => assert_eq!(step, 2),
        other => panic!("expected numerical error, got {other:?}"),
    }
}

#[test]
fn config_validation() {
    assert!(SolverConfig::new(4, 1).validate().is_err());
    assert!(SolverConfig::new(0, 10).validate().is_err());
    let mut c = SolverConfig::new(4, 10);
    c.picard_iters = 0;
    assert!(c.validate().is_err());
    let mut c = SolverConfig::new(4, 10);
    c.y_floor = Some(2.0);
    let problem = martingale(TerminalSpec::constant(1.0));
    assert!(c.floor_for(&problem).is_err());
    let paths = ensemble(8, 10, 0);
    assert!(solve(&problem, &paths, &SolverConfig::new(4, 10)).is_err());
}

#[test]
fn singular_needs_positive_terminal() {
    let xi = TerminalSpec::custom("w", |x| x[0], None);
    let problem = BsdeProblem::new(GeneratorSpec::singular(1.0), xi, 1).unwrap();
    let paths = ensemble(4, 10, 0);
    assert!(solve_backward(&problem, &paths, &SolverConfig::new(4, 10)).is_err());
    assert!(solve_via_transform(&problem, &paths, &SolverConfig::new(4, 10)).is_err());
}

#[test]
fn stiff_generator_uses_root_fallback() {
    // Δt·|∂f/∂y| = 4 > 1: Picard diverges, bisection still finds the root
    let gen = GeneratorSpec::custom("stiff", |_, _, y, _| 8.0 * (1.0 - y));
    let problem = BsdeProblem::new(gen, TerminalSpec::constant(3.0), 1).unwrap();
    let paths = ensemble(2, 10, 0);
    let sol = solve_backward(&problem, &paths, &SolverConfig::new(2, 10)).unwrap();
    assert!(sol.diagnostics.root_fallbacks > 0);
    assert!(sol.is_converged());
    // implicit Euler: y = (c + 4)/5
    let y1 = (3.0 + 4.0) / 5.0;
    let y0 = (y1 + 4.0) / 5.0;
    assert!((sol.y0 - y0).abs() < 1e-9);
}

#[test]
fn deterministic_across_runs() {
    let (problem, _) = oracle_delta(2.0, &TerminalSpec::lognormal(0.5, 0.0), StateLaw::brownian(1.0)).unwrap();
    let paths = ensemble(8, 3_000, 4);
    let cfg = SolverConfig::new(8, 3_000).with_mode(SolveMode::Direct);
    let a = solve(&problem, &paths, &cfg).unwrap();
    let b = solve(&problem, &paths, &cfg).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.z, b.z);
}

#[test]
fn bmo_proxy_of_zero_z_is_zero() {
    let paths = ensemble(8, 100, 0);
    let mut sol = solve(
        &martingale(TerminalSpec::constant(2.0)),
        &paths,
        &SolverConfig::new(8, 100),
    )
    .unwrap();
    assert!(sol.z.iter().all(|v| v.abs() < 1e-12));
    sol.z = crate::stochastic::PathField::zeros(100, 8, 1);
    assert_eq!(estimate_bmo_proxy(&sol, &RegressionBasis::polynomial(3)).unwrap(), 0.0);
}

#[test]
fn bmo_proxy_martingale_matches_quadratic_variation() {
    // Z_t = e^{W_t + (T−t)/2}; E_0 ∫|Z|² dt = ∫ e^{2t + (1−t)} dt = e(e − 1)
    let paths = ensemble(32, 20_000, 8);
    let sol = solve(
        &martingale(TerminalSpec::lognormal(1.0, 0.0)),
        &paths,
        &SolverConfig::new(32, 20_000),
    )
    .unwrap();
    let basis = RegressionBasis::polynomial(3);
    let proxy = estimate_bmo_proxy(&sol, &basis).unwrap();
    let at_zero = 1f64.exp() * (1f64.exp() - 1.0);
    assert!(proxy >= 0.9 * at_zero, "{proxy} vs {at_zero}");
    assert!(proxy.is_finite());
}

#[test]
fn moment_check_trivial_and_excluded() {
    let paths = ensemble(4, 50, 0);
    let sol = solve(
        &martingale(TerminalSpec::constant(1.0)),
        &paths,
        &SolverConfig::new(4, 50),
    )
    .unwrap();
    let env = Envelope::new(0.0, 0.0, 0.0, 0.5);
    let xi = vec![1.0; 50];
    let m = moment_estimate_check(&sol, 2.0, &env, &xi).unwrap();
    assert_eq!(m.lhs, 1.0);
    assert_eq!(m.rhs, 2.0);
    assert!(m.pass && m.ratio <= 1.0);
    assert!(moment_estimate_check(&sol, 2.0, &Envelope::singular(1.0), &xi).is_err());
    assert!(moment_estimate_check(&sol, 1.0, &env, &xi).is_err());
}

#[test]
fn value_at_reproduces_ensemble_values() {
    let (problem, _) = oracle_delta(1.0, &TerminalSpec::lognormal(0.5, 0.0), StateLaw::brownian(1.0)).unwrap();
    let paths = ensemble(8, 2_000, 6);
    for mode in [SolveMode::Direct, SolveMode::Transform] {
        let sol = solve(&problem, &paths, &SolverConfig::new(8, 2_000).with_mode(mode)).unwrap();
        for i in [0, 3, 7, 8] {
            for p in [0, 17, 1999] {
                let x = sol.state.row(p, i);
                let v = sol.value_at(i, x);
                assert!(
                    (v - sol.y.get(p, i, 0)).abs() <= 1e-10 * v.abs().max(1.0),
                    "{mode:?} {i} {p}"
                );
            }
        }
    }
}
