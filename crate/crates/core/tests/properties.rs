use proptest::prelude::*;

use singular_bsde::pde::{solve_semilinear, Boundary, PdeGrid, SdeCoefficients};
use singular_bsde::problems::{oracle_delta, oracle_martingale, BsdeProblem, GeneratorSpec, StateLaw, TerminalSpec};
use singular_bsde::solver::{solve, SolveMode, SolverConfig};
use singular_bsde::stochastic::{conditional_expectation, PathEnsemble, RegressionBasis, TimeGrid};
use singular_bsde::transforms::{LogAffineTransform, PowerTransform, Transform};

fn ensemble(n_steps: usize, n_paths: usize, seed: u64) -> PathEnsemble {
    PathEnsemble::sample(&TimeGrid::new(1.0, n_steps).unwrap(), 1, n_paths, seed).unwrap()
}

fn basis() -> impl Strategy<Value = RegressionBasis> {
    prop_oneof![
        (1usize..6).prop_map(RegressionBasis::polynomial),
        (2usize..12).prop_map(RegressionBasis::bins),
        (2usize..10, 1usize..3).prop_map(|(b, d)| RegressionBasis::local(b, d)),
    ]
}

fn check_transform(t: &dyn Transform, a: f64, b: f64) -> Result<(), TestCaseError> {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    prop_assume!(hi - lo > 1e-9 * hi);
    let (ulo, uhi) = (t.eval(lo).unwrap(), t.eval(hi).unwrap());
    prop_assert!(ulo < uhi, "{}: u({lo}) = {ulo} >= u({hi}) = {uhi}", t.name());
    for y in [lo, hi] {
        let back = t.invert(t.eval(y).unwrap()).unwrap();
        prop_assert!(
            (back - y).abs() <= 1e-12 * y.abs().max(1.0),
            "{}: {y} -> {back}",
            t.name()
        );
    }
    Ok(())
}

proptest! {
    // away from y = 0, where (y^{1+δ} − 1)/(1+δ) flattens below f64 resolution
    #[test]
    fn power_transform_is_increasing_and_invertible(delta in 0.0f64..3.0, a in -1.0f64..1.5, b in -1.0f64..1.5) {
        check_transform(&PowerTransform::new(delta).unwrap(), 10f64.powf(a), 10f64.powf(b))?;
    }

    #[test]
    fn log_affine_transform_is_increasing_and_invertible(delta in 0.0f64..3.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        check_transform(&LogAffineTransform::new(delta).unwrap(), 10f64.powf(a), 10f64.powf(b))?;
    }

    #[test]
    fn conditional_expectation_is_idempotent(basis in basis(), seed in 0u64..1000) {
        let paths = ensemble(4, 400, seed);
        let state = paths.positions().at(2).to_vec();
        let target: Vec<f64> = paths.positions().at(4).iter().map(|w| (w * 0.7).sin() + w * w).collect();
        let once = conditional_expectation(&target, &state, 1, &basis).unwrap();
        let twice = conditional_expectation(&once, &state, 1, &basis).unwrap();
        let scale = once.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn constants_are_reproduced(basis in basis(), c in -1e3f64..1e3, seed in 0u64..1000) {
        let paths = ensemble(2, 300, seed);
        let state = paths.positions().at(1).to_vec();
        let fit = conditional_expectation(&vec![c; 300], &state, 1, &basis).unwrap();
        for v in fit {
            prop_assert!((v - c).abs() <= 1e-9 * c.abs().max(1.0));
        }
    }

    #[test]
    fn oracles_meet_the_terminal_and_jensen(delta in 0.05f64..3.0, sigma in 0.2f64..1.5, x in -4.0f64..4.0) {
        let xi = TerminalSpec::lognormal(sigma, 0.0);
        let (_, exact) = oracle_delta(delta, &xi, StateLaw::brownian(1.0)).unwrap();
        let mart = oracle_martingale(&xi, StateLaw::brownian(1.0)).unwrap();
        let target = xi.eval(&[x]);
        prop_assert!((exact.y(1.0, &[x]) - target).abs() <= 1e-12 * target);
        prop_assert!(exact.y(0.0, &[0.0]) > mart.y(0.0, &[0.0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_respects_ordered_data(delta in 0.2f64..2.0, shrink in 0.5f64..1.0, seed in 0u64..1000) {
        let paths = ensemble(16, 4000, seed);
        let cfg = SolverConfig::new(16, 4000)
            .with_basis(RegressionBasis::local(10, 1))
            .with_mode(SolveMode::Direct)
            .with_seed(seed);
        let xi = TerminalSpec::lognormal(0.5, 0.0);
        let lower = BsdeProblem::new(GeneratorSpec::zero(), xi.scaled(shrink), 1).unwrap();
        let upper = BsdeProblem::new(GeneratorSpec::singular(delta), xi.clone(), 1).unwrap();
        let (a, b) = (solve(&lower, &paths, &cfg).unwrap(), solve(&upper, &paths, &cfg).unwrap());
        prop_assert!(a.y0 <= b.y0 + 3.0 * a.y0_stderr.hypot(b.y0_stderr), "{} > {}", a.y0, b.y0);
        for (p, w) in paths.positions().at(16).iter().enumerate() {
            prop_assert_eq!(b.y.get(p, 16, 0).to_bits(), xi.eval(&[*w]).to_bits());
        }
    }

    #[test]
    fn pde_is_monotone_in_terminal_data(scale in 1.0f64..2.0, delta in 0.0f64..1.5) {
        let grid = PdeGrid::new(-4.0, 4.0, 80, 40, 1.0, Boundary::LogLinear).unwrap();
        let coeffs = SdeCoefficients::brownian(1.0);
        let f = GeneratorSpec::singular(delta);
        let psi = TerminalSpec::lognormal(1.0, 0.0);
        let lo = solve_semilinear(&f, &psi, &coeffs, &grid, 1e-6).unwrap();
        let hi = solve_semilinear(&f, &psi.scaled(scale), &coeffs, &grid, 1e-6).unwrap();
        for (a, b) in lo.u.iter().zip(&hi.u) {
            prop_assert!(*a <= b + 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn ensembles_depend_only_on_the_seed(seed in any::<u64>(), n_paths in 2usize..300) {
        let a = ensemble(8, n_paths, seed);
        let b = ensemble(8, n_paths, seed);
        prop_assert!(a.increments().as_slice().iter().zip(b.increments().as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn solutions_do_not_depend_on_thread_count() {
    let problem = BsdeProblem::new(GeneratorSpec::singular(1.0), TerminalSpec::lognormal(1.0, 0.0), 1).unwrap();
    let cfg = SolverConfig::new(16, 20_000)
        .with_basis(RegressionBasis::polynomial(4))
        .with_seed(7);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let paths = ensemble(16, 20_000, 7);
            let sol = solve(&problem, &paths, &cfg).unwrap();
            (
                sol.y0.to_bits(),
                sol.y.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            )
        })
    };
    assert_eq!(run(1), run(3));
}
