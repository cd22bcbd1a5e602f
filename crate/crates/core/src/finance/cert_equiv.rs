use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{norm, norm_sq, BsdeProblem, GeneratorSpec, TerminalSpec, TimeFn};
use crate::quadrature::{integrate, Tolerance};
use crate::solver::{mean, sample_sd, solve, BackwardSolution, SolveMode, SolverConfig};
use crate::stochastic::{PathEnsemble, PathField};

/// `u(y) = e^{2√−y}(1/2 − √−y) − 1/2` on `y ≤ 0`; increasing and concave,
/// mapping `(−∞, 0]` onto `(−∞, 0]`.
pub fn utility(y: f64) -> f64 {
    let s = (-y).sqrt();
    (2.0 * s).exp() * (0.5 - s) - 0.5
}

/// `u'(y) = e^{2√−y}`.
pub fn utility_derivative(y: f64) -> f64 {
    (2.0 * (-y).sqrt()).exp()
}

/// `u''(y) = −e^{2√−y}/√−y`.
pub fn utility_second_derivative(y: f64) -> f64 {
    let s = (-y).sqrt();
    -(2.0 * s).exp() / s
}

/// `u⁻¹(v)` for `v ≤ 0` by bisection to `1e-12` (relative above 1).
pub fn utility_inverse(v: f64) -> Result<f64> {
    if !(v <= 0.0) {
        return Err(Error::Domain {
            transform: "utility_inverse",
            value: v,
            bound: "v <= 0".into(),
        });
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    // u(y) ≤ y for y ≤ 0, so the root lies in [v, 0]
    let (mut lo, mut hi) = (v, 0.0f64);
    while hi - lo > 1e-12 * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if utility(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `−clamp(e^{σW_T}, 1/K, K)`.
pub fn clipped_lognormal_loss(sigma: f64, k: f64) -> TerminalSpec {
    TerminalSpec::custom(
        format!("-clamp(exp({sigma}W),1/{k},{k})"),
        move |x| -(sigma * x[0]).exp().clamp(1.0 / k, k),
        None,
    )
}

/// `u⁻¹(E[u(g(W_T))])` for `W_T ~ N(0, T)` by adaptive quadrature.
pub fn certainty_equivalent_quadrature(g: impl Fn(f64) -> f64, horizon: f64) -> Result<f64> {
    let s = horizon.sqrt();
    let dens = |w: f64| (-0.5 * (w / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let mut total = 0.0;
    // split at the origin and integrate out to ±12 sd
    for (a, b) in [(-12.0 * s, 0.0), (0.0, 12.0 * s)] {
        total += integrate(|w| utility(g(w)) * dens(w), a, b, Tolerance::TIGHT)?;
    }
    utility_inverse(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertaintyEquivalentReport {
    pub route_a: f64,
    pub route_a_stderr: f64,
    pub route_b: f64,
    pub route_b_stderr: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub routes_agree: bool,
    pub mean_terminal: f64,
    pub mean_terminal_stderr: f64,
    /// `C₀ ≤ E[ξ] − 3·se` for route A.
    pub risk_averse: bool,
    pub negative: bool,
}

#[derive(Debug, Clone)]
pub struct CertaintyEquivalent {
    /// g-expectation of `u(ξ)` with generator `−γ|z|`.
    pub g_expectation: BackwardSolution,
    /// `u⁻¹` of the g-expectation, pathwise.
    pub route_a: PathField,
    /// Direct solve with generator `−(γ|z| + |z|²/(2√−y))`.
    pub route_b: BackwardSolution,
    pub report: CertaintyEquivalentReport,
}

/// `C_t(ξ) = u⁻¹(ε_t^g[u(ξ)])` by two routes on common paths.
pub fn certainty_equivalent(
    xi: &TerminalSpec,
    gamma: TimeFn,
    paths: &PathEnsemble,
    config: &SolverConfig,
) -> Result<CertaintyEquivalent> {
    let d = paths.dim();
    let last = paths.positions().at(paths.n_steps());
    let samples: Vec<f64> = last.chunks(d).map(|r| xi.eval(r)).collect();
    if let Some(v) = samples.iter().find(|v| !(**v < 0.0)) {
        return Err(Error::invalid(format!(
            "certainty equivalent needs xi < 0; sampled {v}"
        )));
    }
    let config = config.clone().with_mode(SolveMode::Direct);

    let ga = gamma.clone();
    let g = GeneratorSpec::custom("-gamma|z|", move |t, _x, _y, z| -ga.at(t) * norm(z));
    let ux = xi.mapped(format!("u({})", xi.label()), utility);
    let g_expectation = solve(&BsdeProblem::new(g, ux, d)?, paths, &config)?;
    let mut route_a = PathField::zeros(g_expectation.n_paths(), g_expectation.y.n_times(), 1);
    for i in 0..g_expectation.y.n_times() {
        for (o, &v) in route_a.at_mut(i).iter_mut().zip(g_expectation.y.at(i)) {
            *o = utility_inverse(v.min(0.0))?;
        }
    }
    let c0_a = route_a.get(0, 0, 0);
    let se_a = g_expectation.y0_stderr / utility_derivative(c0_a);

    let gb = gamma;
    let direct = GeneratorSpec::custom("-(gamma|z|+|z|^2/(2sqrt(-y)))", move |t, _x, y, z| {
        let s = (-y).max(f64::MIN_POSITIVE).sqrt();
        -(gb.at(t) * norm(z) + norm_sq(z) / (2.0 * s))
    });
    let route_b = solve(&BsdeProblem::new(direct, xi.clone(), d)?, paths, &config)?;

    let mean_terminal = mean(&samples);
    let mean_terminal_stderr = sample_sd(&samples) / (samples.len() as f64).sqrt();
    let discrepancy = (c0_a - route_b.y0).abs();
    let tolerance = (0.02 * c0_a.abs()).max(3.0 * se_a.hypot(route_b.y0_stderr));
    let negative = route_a.iter().all(|&v| v < 0.0) && route_b.y.iter().all(|&v| v < 0.0);
    let report = CertaintyEquivalentReport {
        route_a: c0_a,
        route_a_stderr: se_a,
        route_b: route_b.y0,
        route_b_stderr: route_b.y0_stderr,
        discrepancy,
        tolerance,
        routes_agree: discrepancy <= tolerance,
        mean_terminal,
        mean_terminal_stderr,
        risk_averse: c0_a <= mean_terminal - 3.0 * se_a.hypot(mean_terminal_stderr),
        negative,
    };
    Ok(CertaintyEquivalent {
        g_expectation,
        route_a,
        route_b,
        report,
    })
}
