//! Reference values computed independently of the library.

#![allow(dead_code)]

/// `E[g(W_T)]` for `W_T ~ N(0, T)` by composite Simpson on `±12` standard
/// deviations.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, horizon: f64) -> f64 {
    let s = horizon.sqrt();
    let (a, b, n) = (-12.0 * s, 12.0 * s, 24_000usize);
    let h = (b - a) / n as f64;
    let dens = |w: f64| (-0.5 * (w / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let mut acc = 0.0;
    for k in 0..=n {
        let w = a + k as f64 * h;
        let c = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += c * g(w) * dens(w);
    }
    acc * h / 3.0
}

/// `(E[e^{(1+δ)W_1}])^{1/(1+δ)}`.
pub fn delta_power_y0(delta: f64) -> f64 {
    gaussian_expectation(|w| ((1.0 + delta) * w).exp(), 1.0).powf(1.0 / (1.0 + delta))
}

/// `(E[e^{W_1}])^p`.
pub fn power_y0(p: f64) -> f64 {
    gaussian_expectation(f64::exp, 1.0).powf(p)
}

/// `(E ξ²)^{1/2} − E ξ` for `ξ = e^{W_1}`.
pub fn jensen_gap() -> f64 {
    gaussian_expectation(|w| (2.0 * w).exp(), 1.0).sqrt() - gaussian_expectation(f64::exp, 1.0)
}

pub fn ce_utility(y: f64) -> f64 {
    let s = (-y).sqrt();
    (2.0 * s).exp() * (0.5 - s) - 0.5
}

/// Certainty equivalent of `−clamp(e^{W_1}, 1/k, k)` under the exponential
/// square-root utility.
pub fn certainty_equivalent(k: f64) -> f64 {
    let v = gaussian_expectation(|w| ce_utility(-w.exp().clamp(1.0 / k, k)), 1.0);
    let (mut lo, mut hi) = (v.min(-k * 10.0), 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ce_utility(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `u(t, x) = e^{x + (T−t)/2}` for the heat problem with `ψ = e^x`.
pub fn heat(t: f64, x: f64) -> f64 {
    (x + 0.5 * (1.0 - t)).exp()
}

/// `u(t, x) = e^{x + (T−t)}`, the δ = 1 singular problem with `ψ = e^x`.
pub fn singular_one(t: f64, x: f64) -> f64 {
    (x + (1.0 - t)).exp()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
