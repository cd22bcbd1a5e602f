use serde::Serialize;

use super::BackwardSolution;
use crate::error::{Error, Result};
use crate::problems::{norm_sq, Envelope};
use crate::stochastic::{empirical_sup_moment, Projector, RegressionBasis};

/// Grid-time BMO proxy: `max_i max_paths E[Σ_{j≥i} |Z_j|² Δt | state_i]`.
pub fn estimate_bmo_proxy(solution: &BackwardSolution, basis: &RegressionBasis) -> Result<f64> {
    let z = &solution.z;
    if !z.all_finite() {
        return Err(Error::NonFinite {
            context: "Z field for BMO proxy".into(),
        });
    }
    let (n_paths, n) = (z.n_paths(), z.n_times());
    let dt = solution.grid.dt();
    let w = solution.state.width();
    let mut tail = vec![0.0; n_paths];
    let mut proxy = 0.0f64;
    for i in (0..n).rev() {
        for (p, t) in tail.iter_mut().enumerate() {
            *t += norm_sq(z.row(p, i)) * dt;
        }
        if tail.iter().all(|&v| v == 0.0) {
            continue;
        }
        let proj = Projector::new(basis, solution.state.at(i), w)?;
        let fitted = proj.project(&tail)?;
        let m = fitted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        proxy = proxy.max(m);
    }
    Ok(proxy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    pub lhs: f64,
    /// Right side without the unknown constant.
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Compares `E[sup Y^{2p(2+δ)} + (∫|Z|²)^p]` with
/// `exp{p/(p−1)∫γ² + 2p(2+δ)∫(a+b)}·E[ξ^{2p(2+δ)} + 1]`.
/// `pass` means the ratio is finite and positive.
pub fn moment_estimate_check(
    solution: &BackwardSolution,
    p: f64,
    envelope: &Envelope,
    xi: &[f64],
) -> Result<MomentCheck> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("moment exponent p must exceed 1, got {p}")));
    }
    let delta = envelope.delta;
    if delta == 1.0 {
        return Err(Error::invalid("the moment estimate excludes δ = 1"));
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid("the moment estimate needs δ >= 0"));
    }
    if xi.is_empty() || xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("terminal samples must be finite and non-empty"));
    }
    let q = 2.0 * p * (2.0 + delta);
    let sup = empirical_sup_moment(&solution.y, q)?.powf(q);

    let dt = solution.grid.dt();
    let z = &solution.z;
    let mut qv = 0.0;
    for path in 0..z.n_paths() {
        let s: f64 = (0..z.n_times()).map(|i| norm_sq(z.row(path, i)) * dt).sum();
        qv += s.powf(p);
    }
    qv /= z.n_paths() as f64;
    if !qv.is_finite() {
        return Err(Error::NonFinite {
            context: "quadratic variation moment".into(),
        });
    }
    let lhs = sup + qv;

    let horizon = solution.grid.horizon();
    let exponent = p / (p - 1.0) * envelope.gamma.integral_sq(0.0, horizon)?
        + q * (envelope.a.integral(0.0, horizon)? + envelope.b.integral(0.0, horizon)?);
    let xi_moment = xi.iter().map(|x| x.abs().powf(q) + 1.0).sum::<f64>() / xi.len() as f64;
    let rhs = exponent.exp() * xi_moment;
    let ratio = lhs / rhs;
    Ok(MomentCheck {
        lhs,
        rhs,
        ratio,
        pass: ratio.is_finite() && ratio > 0.0,
    })
}
