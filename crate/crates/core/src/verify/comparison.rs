use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::BsdeProblem;
use crate::solver::{batch_stderr, simulate_state, solve, SolverConfig};
use crate::stochastic::PathEnsemble;

/// Problems with `f¹ ≤ f²` and `ξ¹ ≤ ξ²`, plus the reason why.
#[derive(Debug, Clone)]
pub struct OrderedProblemPair {
    pub label: String,
    pub lower: BsdeProblem,
    pub upper: BsdeProblem,
    pub certificate: String,
}

impl OrderedProblemPair {
    pub fn new(
        label: impl Into<String>,
        lower: BsdeProblem,
        upper: BsdeProblem,
        certificate: impl Into<String>,
    ) -> Self {
        Self {
            label: label.into(),
            lower,
            upper,
            certificate: certificate.into(),
        }
    }

    /// Samples `f¹ ≤ f² + 1e-12` at `n` points (states from the paths,
    /// `y` log-uniform on `[1e-3, 1e3]`, Gaussian `z` of log-uniform scale)
    /// and `ξ¹ ≤ ξ²` on every terminal state.
    pub fn check_certificate(&self, paths: &PathEnsemble, n: usize, seed: u64) -> Result<()> {
        if self.lower.dim != self.upper.dim || self.lower.state_dim() != self.upper.state_dim() {
            return Err(Error::Invariant("pair members have different dimensions".into()));
        }
        let state = simulate_state(&self.upper, paths)?;
        let (n_paths, n_times, d) = (state.n_paths(), state.n_times(), self.upper.dim);
        let grid = paths.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            let i = rng.random_range(0..n_times);
            let p = rng.random_range(0..n_paths);
            let t = grid.t(i);
            let x = state.row(p, i);
            let y = 10f64.powf(rng.random_range(-3.0..3.0));
            let scale = 10f64.powf(rng.random_range(-3.0..2.0));
            for v in z.iter_mut() {
                *v = scale * rng.sample::<f64, _>(StandardNormal);
            }
            let (f1, f2) = (
                self.lower.generator.eval(t, x, y, &z),
                self.upper.generator.eval(t, x, y, &z),
            );
            if !(f1 <= f2 + 1e-12) {
                return Err(Error::Invariant(format!(
                    "f1 = {f1} > f2 = {f2} at t={t}, x={x:?}, y={y}, z={z:?}"
                )));
            }
        }
        let last = n_times - 1;
        for p in 0..n_paths {
            let x = state.row(p, last);
            let (a, b) = (self.lower.terminal.eval(x), self.upper.terminal.eval(x));
            if !(a <= b) {
                return Err(Error::Invariant(format!("xi1 = {a} > xi2 = {b} at {x:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub label: String,
    pub certificate: String,
    /// Present when the certificate failed and the pair was not solved.
    pub skipped: Option<String>,
    /// Per grid time, `max_paths (Y¹ − Y²)⁺`.
    pub max_violation: Vec<f64>,
    /// Per grid time, `max_paths (Y¹ − Y²)⁺ / (3·sqrt(se¹² + se²²))` with
    /// pathwise regression standard errors from batch resampling.
    pub worst_ratio: Vec<f64>,
    pub y0_lower: f64,
    pub y0_upper: f64,
    pub gap0_stderr: f64,
    pub pass: bool,
}

impl PairReport {
    pub fn gap0(&self) -> f64 {
        self.y0_upper - self.y0_lower
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub pairs: Vec<PairReport>,
    pub pass: bool,
}

/// Solves each pair on the shared ensemble and checks `Y¹ ≤ Y²` at every
/// grid time up to three combined standard errors.
pub fn comparison_battery(
    pairs: &[OrderedProblemPair],
    paths: &PathEnsemble,
    config: &SolverConfig,
    batches: usize,
) -> Result<ComparisonReport> {
    let mut out = Vec::with_capacity(pairs.len());
    for (k, pair) in pairs.iter().enumerate() {
        if let Err(e) = pair.check_certificate(paths, 10_000, config.seed.wrapping_add(k as u64)) {
            out.push(PairReport {
                label: pair.label.clone(),
                certificate: pair.certificate.clone(),
                skipped: Some(e.to_string()),
                max_violation: Vec::new(),
                worst_ratio: Vec::new(),
                y0_lower: f64::NAN,
                y0_upper: f64::NAN,
                gap0_stderr: f64::NAN,
                pass: false,
            });
            continue;
        }
        let lo = solve(&pair.lower, paths, config)?;
        let hi = solve(&pair.upper, paths, config)?;
        let se_lo = batch_stderr(&pair.lower, paths, config, batches)?;
        let se_hi = batch_stderr(&pair.upper, paths, config, batches)?;
        let n_times = lo.y.n_times();
        let mut max_violation = Vec::with_capacity(n_times);
        let mut worst_ratio = Vec::with_capacity(n_times);
        for i in 0..n_times {
            let (mut v_max, mut r_max) = (0.0f64, 0.0f64);
            for p in 0..lo.y.n_paths() {
                let v = (lo.y.get(p, i, 0) - hi.y.get(p, i, 0)).max(0.0);
                if v > 0.0 {
                    let tol = 3.0 * se_lo.get(p, i, 0).hypot(se_hi.get(p, i, 0));
                    v_max = v_max.max(v);
                    r_max = r_max.max(if tol > 0.0 { v / tol } else { f64::INFINITY });
                }
            }
            max_violation.push(v_max);
            worst_ratio.push(r_max);
        }
        let pass = worst_ratio.iter().all(|&r| r <= 1.0);
        out.push(PairReport {
            label: pair.label.clone(),
            certificate: pair.certificate.clone(),
            skipped: None,
            max_violation,
            worst_ratio,
            y0_lower: lo.y0,
            y0_upper: hi.y0,
            gap0_stderr: se_lo.get(0, 0, 0).hypot(se_hi.get(0, 0, 0)),
            pass,
        });
    }
    let pass =
        !out.is_empty() && out.iter().all(|p| p.skipped.is_some() || p.pass) && out.iter().any(|p| p.skipped.is_none());
    Ok(ComparisonReport { pairs: out, pass })
}
