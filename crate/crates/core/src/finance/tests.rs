use super::*;
use crate::problems::{TerminalSpec, TimeFn};
use crate::solver::{SolveMode, SolverConfig};
use crate::stochastic::{PathEnsemble, RegressionBasis, TimeGrid};
use crate::transforms::PsiProfile;

fn setup(n: usize, np: usize, seed: u64) -> (PathEnsemble, SolverConfig) {
    let paths = PathEnsemble::sample(&TimeGrid::new(1.0, n).unwrap(), 1, np, seed).unwrap();
    let cfg = SolverConfig::new(n, np)
        .with_basis(RegressionBasis::local(20, 2))
        .with_seed(seed);
    (paths, cfg)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `E[f(W_1)]` by composite Simpson on pieces split at the kinks of `f`.
fn gauss_mean_split(f: impl Fn(f64) -> f64, kinks: &[f64]) -> f64 {
    let g = |w: f64| f(w) * (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut pts = vec![-12.0];
    pts.extend_from_slice(kinks);
    pts.push(12.0);
    pts.windows(2).map(|ab| simpson(&g, ab[0], ab[1], 20_000)).sum()
}

#[test]
fn constant_terminal_gives_constant_utility() {
    let (paths, cfg) = setup(16, 500, 3);
    let spec = RobustSduSpec::without_aggregator(
        PsiProfile::Linear { slope: 1.0 },
        TerminalSpec::constant(-2.0),
        1.0,
        -3.0,
    )
    .unwrap();
    let sol = solve_sdu(&spec, &paths, &cfg).unwrap();
    assert!(sol.v.iter().all(|&v| (v + 2.0).abs() < 1e-12));
    assert!(sol.m.iter().all(|&m| m.abs() < 1e-10));
    let hat = optimal_distortion(&sol, &spec.psi).unwrap();
    assert!(hat.field.iter().all(|x| x.abs() < 1e-10));
    assert!(hat.process.eval(0.3, 0.7).abs() < 1e-10);
}

#[test]
fn distortion_arithmetic() {
    assert_eq!(distortion_at(-1.0, 0.5, &PsiProfile::Linear { slope: 1.0 }), -0.5);
    assert_eq!(distortion_at(-2.0, 1.0, &PsiProfile::Linear { slope: 0.5 }), -1.0);
}

#[test]
fn spec_rejects_terminal_above_margin() {
    let (paths, cfg) = setup(8, 200, 1);
    let spec = RobustSduSpec::without_aggregator(
        PsiProfile::Linear { slope: 1.0 },
        TerminalSpec::custom("-exp(W)", |x| -x[0].exp(), None),
        0.5,
        -100.0,
    )
    .unwrap();
    assert!(matches!(
        solve_sdu(&spec, &paths, &cfg),
        Err(crate::Error::Invariant(_))
    ));
    assert!(RobustSduSpec::without_aggregator(PsiProfile::Sqrt, TerminalSpec::constant(-2.0), 1.0, -0.5).is_err());
}

#[test]
fn reflected_value_matches_power_moment() {
    // F ≡ 0, ψ(x) = x: −V solves the δ = 1 problem, so −V₀ = (E[(−ξ)²])^{1/2}
    let (paths, cfg) = setup(32, 20_000, 7);
    let (cap, d) = (3.0, 0.5);
    let spec = RobustSduSpec::without_aggregator(
        PsiProfile::Linear { slope: 1.0 },
        RobustSduSpec::capped_exponential_terminal(1.0, cap, d),
        d,
        -cap - d,
    )
    .unwrap();
    let sol = solve_sdu(&spec, &paths, &cfg).unwrap();
    let exact = gauss_mean_split(|w| (w.exp().min(cap) + d).powi(2), &[cap.ln()]).sqrt();
    assert!((-sol.v0 - exact).abs() / exact < 0.02, "{} vs {exact}", -sol.v0);
    assert!(sol.v.iter().all(|&v| v < 0.0));
}

#[test]
fn zero_distortion_without_aggregator_is_expectation() {
    let (paths, cfg) = setup(16, 5_000, 2);
    let spec = RobustSduSpec::without_aggregator(
        PsiProfile::Linear { slope: 1.0 },
        RobustSduSpec::capped_exponential_terminal(1.0, 3.0, 0.5),
        0.5,
        -3.5,
    )
    .unwrap();
    let pen = evaluate_penalized(&spec, &DistortionProcess::zero(), &paths, &cfg).unwrap();
    let n = paths.n_steps();
    let mean: f64 = (0..paths.n_paths())
        .map(|p| -paths.w(p, n, 0).exp().min(3.0) - 0.5)
        .sum::<f64>()
        / paths.n_paths() as f64;
    assert!((pen.v0 - mean).abs() < 1e-10, "{} vs {mean}", pen.v0);
}

#[test]
fn constant_drift_shifts_the_state() {
    // ξ = −e^{W̃_T} − 1 with W̃_T = W_T + c: V^x₀ = E[ξ] − ψ-penalty contribution,
    // and for ψ·x² small the value is close to −e^{c+1/2} − 1
    let (paths, cfg) = setup(16, 20_000, 4);
    let spec = RobustSduSpec::without_aggregator(
        PsiProfile::Linear { slope: 1e-9 },
        RobustSduSpec::capped_exponential_terminal(1.0, 1e6, 1.0),
        1.0,
        -1e7,
    )
    .unwrap();
    let pen = evaluate_penalized(&spec, &DistortionProcess::constant(0.3), &paths, &cfg).unwrap();
    let exact = -(0.3f64 + 0.5).exp() - 1.0;
    assert!(
        (pen.v0 - exact).abs() < 4.0 * pen.v0_stderr + 1e-6,
        "{} vs {exact}",
        pen.v0
    );
}

#[test]
fn random_distortions_respect_bound() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for k in 0..20 {
        let x = DistortionProcess::random(&mut rng, 2.0, k);
        assert!(x.bound <= 2.0);
        x.check(1.0, -6.0, 6.0, 2_000, k as u64).unwrap();
    }
    let bad = DistortionProcess::new("w", |_, w| w, 1.0);
    assert!(bad.check(1.0, -6.0, 6.0, 2_000, 1).is_err());
}

#[test]
fn robustness_battery_is_ordered() {
    let (paths, cfg) = setup(16, 10_000, 5);
    let spec = RobustSduSpec::without_aggregator(
        PsiProfile::Linear { slope: 1.0 },
        RobustSduSpec::capped_exponential_terminal(1.0, 3.0, 0.5),
        0.5,
        -3.5,
    )
    .unwrap();
    let r = robustness_battery(&spec, &paths, &cfg, 4, 2.0).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r.pass, "{r:?}");
}

fn ez_by_hand(rho: f64, gamma: f64, eta: f64, c: f64, v: f64) -> f64 {
    let base = (1.0 - gamma) * v;
    let power = (gamma - rho) / (1.0 - gamma);
    let first = c.powf(1.0 - rho) / base.powf(power);
    (first - eta * (1.0 - gamma) * v) / (1.0 - rho)
}

#[test]
fn epstein_zin_values() {
    let ez = epstein_zin_generator(2.0, 1.5, 0.0, TimeFn::Constant(1.0)).unwrap();
    assert!((ez.eval(0.0, -1.0) + 2.0).abs() < 1e-14);
    let ez = epstein_zin_generator(3.0, 2.0, 0.3, TimeFn::Constant(0.7)).unwrap();
    for v in [-0.3, -1.0, -4.0] {
        let want = ez_by_hand(3.0, 2.0, 0.3, 0.7, v);
        assert!((ez.eval(0.5, v) - want).abs() < 1e-12 * want.abs().max(1.0));
    }
    let zero = epstein_zin_generator(2.0, 1.5, 0.0, TimeFn::Constant(0.0)).unwrap();
    assert_eq!(zero.eval(0.2, -3.0), 0.0);
    assert!(epstein_zin_generator(2.0, 2.0, 0.0, TimeFn::Constant(1.0)).is_err());
    assert!(epstein_zin_generator(1.5, 2.0, 0.0, TimeFn::Constant(1.0)).is_err());
}

#[test]
fn epstein_zin_spec_certifies_on_band() {
    let (paths, _) = setup(8, 1_000, 1);
    let ez = epstein_zin_generator(2.0, 1.5, 0.0, TimeFn::Constant(1.0)).unwrap();
    let spec = ez
        .spec(
            RobustSduSpec::capped_exponential_terminal(1.0, 3.0, 0.5),
            0.5,
            -3.5,
            1.0,
        )
        .unwrap();
    assert!((spec.envelope.alpha - 4.0).abs() < 1e-12);
    spec.check(&paths, 20_000, 3).unwrap();
    // a large η makes F positive inside the band
    let hot = epstein_zin_generator(2.0, 1.5, 5.0, TimeFn::Constant(1.0)).unwrap();
    let spec = hot
        .spec(
            RobustSduSpec::capped_exponential_terminal(1.0, 3.0, 0.5),
            0.5,
            -3.5,
            1.0,
        )
        .unwrap();
    assert!(spec.check(&paths, 20_000, 3).is_err());
}

#[test]
fn utility_shape() {
    for y in [-1e-4f64, -0.3, -1.0, -5.0, -40.0] {
        let h = 1e-6 * y.abs();
        let fd = (utility(y + h) - utility(y - h)) / (2.0 * h);
        assert!(
            (fd - utility_derivative(y)).abs() / utility_derivative(y) < 1e-6,
            "y={y}"
        );
        let fd2 = (utility_derivative(y + h) - utility_derivative(y - h)) / (2.0 * h);
        assert!((fd2 - utility_second_derivative(y)).abs() / fd2.abs() < 1e-5, "y={y}");
        assert!(utility_second_derivative(y) < 0.0);
        let back = utility_inverse(utility(y)).unwrap();
        assert!((back - y).abs() <= 1e-11 * y.abs().max(1.0), "y={y} back={back}");
    }
    assert_eq!(utility(0.0), 0.0);
    assert!(utility_inverse(0.1).is_err());
}

#[test]
fn certainty_equivalent_of_constant() {
    let (paths, cfg) = setup(16, 1_000, 1);
    let ce = certainty_equivalent(&TerminalSpec::constant(-1.5), TimeFn::zero(), &paths, &cfg).unwrap();
    assert!(ce.route_a.iter().all(|&c| (c + 1.5).abs() < 1e-10));
    assert!(ce.route_b.y.iter().all(|&c| (c + 1.5).abs() < 1e-10));
    assert!(certainty_equivalent(&TerminalSpec::constant(0.0), TimeFn::zero(), &paths, &cfg).is_err());
}

#[test]
fn quadrature_oracle_matches_simpson() {
    let k = 4.0;
    let g = |w: f64| -w.exp().clamp(1.0 / k, k);
    let lib = certainty_equivalent_quadrature(g, 1.0).unwrap();
    let oracle = utility_inverse(gauss_mean_split(|w| utility(g(w)), &[-k.ln(), k.ln()])).unwrap();
    assert!((lib - oracle).abs() < 1e-8, "{lib} vs {oracle}");
}

#[test]
fn routes_agree_and_are_risk_averse() {
    let (paths, cfg) = setup(32, 20_000, 11);
    let k = 4.0;
    let ce = certainty_equivalent(
        &clipped_lognormal_loss(1.0, k),
        TimeFn::zero(),
        &paths,
        &cfg.with_mode(SolveMode::Auto),
    )
    .unwrap();
    let r = &ce.report;
    assert!(r.routes_agree && r.risk_averse && r.negative, "{r:?}");
    let oracle = certainty_equivalent_quadrature(|w| -w.exp().clamp(1.0 / k, k), 1.0).unwrap();
    assert!((r.route_a - oracle).abs() / oracle.abs() < 0.02);
}
