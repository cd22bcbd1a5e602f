use super::*;
use crate::problems::{BsdeProblem, GeneratorSpec, TerminalSpec};
use crate::solver::SolverConfig;
use crate::stochastic::{PathEnsemble, TimeGrid};

fn ensemble(n_steps: usize, n_paths: usize, seed: u64) -> PathEnsemble {
    PathEnsemble::sample(&TimeGrid::new(1.0, n_steps).unwrap(), 1, n_paths, seed).unwrap()
}

#[test]
fn identical_problems_have_zero_gap() {
    let p = BsdeProblem::new(GeneratorSpec::singular(0.5), TerminalSpec::lognormal(0.5, 0.0), 1).unwrap();
    let pair = OrderedProblemPair::new("same", p.clone(), p, "identical");
    let paths = ensemble(8, 4_000, 1);
    let r = comparison_battery(&[pair], &paths, &SolverConfig::new(8, 4_000), 8).unwrap();
    assert!(r.pass);
    assert!(r.pairs[0].max_violation.iter().all(|&v| v == 0.0));
    assert_eq!(r.pairs[0].gap0(), 0.0);
}

#[test]
fn terminal_shift_gap_is_one() {
    let pairs = standard_pairs().unwrap();
    let paths = ensemble(8, 4_000, 2);
    let r = comparison_battery(&pairs[1..2], &paths, &SolverConfig::new(8, 4_000), 8).unwrap();
    assert!((r.pairs[0].gap0() - 1.0).abs() < 1e-9, "{}", r.pairs[0].gap0());
    assert!(r.pass);
}

#[test]
fn violated_certificate_is_skipped() {
    let lo = BsdeProblem::new(GeneratorSpec::linear(1.0, 0.0), TerminalSpec::constant(1.0), 1).unwrap();
    let hi = BsdeProblem::new(GeneratorSpec::zero(), TerminalSpec::constant(1.0), 1).unwrap();
    let pair = OrderedProblemPair::new("reversed", lo, hi, "wrong on purpose");
    let paths = ensemble(4, 100, 0);
    let r = comparison_battery(&[pair], &paths, &SolverConfig::new(4, 100), 4).unwrap();
    assert!(r.pairs[0].skipped.is_some());
    assert!(!r.pass);
}

#[test]
fn standard_certificates_hold() {
    let paths = ensemble(8, 500, 3);
    for pair in standard_pairs().unwrap() {
        pair.check_certificate(&paths, 10_000, 7)
            .unwrap_or_else(|e| panic!("{}: {e}", pair.label));
    }
}

#[test]
fn zero_generator_stability_is_exact_in_n() {
    // f ≡ 0: Yⁿ − Y = Y/n exactly, so e_n = E[ξ]/n at t = 0 up to regression of a constant multiple
    let base = BsdeProblem::new(GeneratorSpec::zero(), TerminalSpec::lognormal(0.5, 0.0), 1).unwrap();
    let seq = PerturbationSequence::scaled_terminals(&base, &[2, 4, 8, 16, 32]);
    let paths = ensemble(8, 4_000, 4);
    let r = stability_battery(&seq, &paths, &SolverConfig::new(8, 4_000)).unwrap();
    for (e, n) in r.errors.iter().zip([2.0, 4.0, 8.0, 16.0, 32.0]) {
        assert!((e * n - r.errors[0] * 2.0).abs() < 1e-9 * e * n, "{:?}", r.errors);
    }
    assert!(r.pass && r.convexity_sampled);
    assert!(r.z_errors.is_some());
}

#[test]
fn shifted_generator_errors_bounded_by_horizon_over_n() {
    let base = BsdeProblem::new(GeneratorSpec::singular(0.5), TerminalSpec::lognormal(0.5, 0.0), 1).unwrap();
    let seq = PerturbationSequence::shifted_generators(&base, &[2, 4, 8, 16]);
    let paths = ensemble(8, 4_000, 5);
    let r = stability_battery(&seq, &paths, &SolverConfig::new(8, 4_000)).unwrap();
    for (e, n) in r.errors.iter().zip([2.0, 4.0, 8.0, 16.0]) {
        assert!(*e <= 1.0 / n * 1.05, "{:?}", r.errors);
    }
    assert!(r.monotone);
}

#[test]
fn short_sequences_are_rejected() {
    let base = BsdeProblem::new(GeneratorSpec::zero(), TerminalSpec::constant(1.0), 1).unwrap();
    let seq = PerturbationSequence::scaled_terminals(&base, &[2, 4, 8]);
    assert!(stability_battery(&seq, &ensemble(4, 10, 0), &SolverConfig::new(4, 10)).is_err());
}

#[test]
fn convexity_sampling_refutes_concave() {
    assert!(sample_convexity(&GeneratorSpec::singular(1.0), 1.0, 1, 1_000, 0));
    let concave = GeneratorSpec::custom("sqrt", |_, _, y, _| y.sqrt());
    assert!(!sample_convexity(&concave, 1.0, 1, 1_000, 0));
}
