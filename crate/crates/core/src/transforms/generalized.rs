//! Auxiliary functions for envelopes of the form
//! `a + b·φ(y) + γ|z| + |z|²/(2ψ(y))`.
//!
//! `Λ(x) = ∫_1^x dr/ψ(r)` drives everything: `û' = e^Λ`, `K' = e^{−Λ}`,
//! `v̂' = K·e^Λ`. Profiles with elementary primitives use closed forms;
//! the rest fall back to adaptive quadrature.

use std::fmt;
use std::sync::Arc;

use super::{
    check_min, check_order, domain_error, solve_increasing, LogAffineTransform, PowerTransform, Transform, DOMAIN_GUARD,
};
use crate::error::{Error, Result};
use crate::problems::TimeFn;
use crate::quadrature::{integrate, Tolerance};

#[derive(Clone)]
pub struct CustomProfile {
    pub label: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.label)
    }
}

/// Profile `ψ` of the quadratic term `|z|²/(2ψ(y))`.
#[derive(Debug, Clone)]
pub enum PsiProfile {
    /// `ψ(r) = slope·r`, equivalent to the power envelope with `δ = 1/slope`.
    Linear {
        slope: f64,
    },
    Sqrt,
    Square,
    Exp,
    Custom(CustomProfile),
}

impl PsiProfile {
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PsiProfile::Custom(CustomProfile {
            label: label.into(),
            f: Arc::new(f),
        })
    }

    pub fn label(&self) -> String {
        match self {
            PsiProfile::Linear { slope } => format!("linear:{slope}"),
            PsiProfile::Sqrt => "sqrt".into(),
            PsiProfile::Square => "square".into(),
            PsiProfile::Exp => "exp".into(),
            PsiProfile::Custom(c) => c.label.clone(),
        }
    }

    pub fn psi(&self, r: f64) -> f64 {
        match self {
            PsiProfile::Linear { slope } => slope * r,
            PsiProfile::Sqrt => r.sqrt(),
            PsiProfile::Square => r * r,
            PsiProfile::Exp => r.exp(),
            PsiProfile::Custom(c) => (c.f)(r),
        }
    }

    /// `Λ(x) = ∫_1^x dr/ψ(r)`, `x > 0`.
    pub fn lambda(&self, x: f64) -> Result<f64> {
        Ok(match self {
            PsiProfile::Linear { slope } => x.ln() / slope,
            PsiProfile::Sqrt => 2.0 * (x.sqrt() - 1.0),
            PsiProfile::Square => 1.0 - 1.0 / x,
            PsiProfile::Exp => (-1.0f64).exp() - (-x).exp(),
            PsiProfile::Custom(c) => integrate(|r| 1.0 / (c.f)(r), 1.0, x, Tolerance::TIGHT)?,
        })
    }
}

/// Profile `φ` multiplying `b` in the envelope. Convex, increasing,
/// positive on `(0, ∞)`.
#[derive(Debug, Clone)]
pub enum PhiProfile {
    Identity,
    Square,
    Exp,
    Custom(CustomProfile),
}

impl PhiProfile {
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PhiProfile::Custom(CustomProfile {
            label: label.into(),
            f: Arc::new(f),
        })
    }

    pub fn label(&self) -> String {
        match self {
            PhiProfile::Identity => "identity".into(),
            PhiProfile::Square => "square".into(),
            PhiProfile::Exp => "exp".into(),
            PhiProfile::Custom(c) => c.label.clone(),
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        match self {
            PhiProfile::Identity => x,
            PhiProfile::Square => x * x,
            PhiProfile::Exp => x.exp(),
            PhiProfile::Custom(c) => (c.f)(x),
        }
    }

    fn dphi(&self, x: f64) -> f64 {
        match self {
            PhiProfile::Identity => 1.0,
            PhiProfile::Square => 2.0 * x,
            PhiProfile::Exp => x.exp(),
            PhiProfile::Custom(c) => {
                let h = 1e-6 * x.abs().max(1e-3);
                ((c.f)(x + h) - (c.f)(x - h)) / (2.0 * h)
            }
        }
    }

    /// `G(x) = ∫_1^x dr/φ(r)`.
    fn primitive(&self, x: f64) -> Result<f64> {
        Ok(match self {
            PhiProfile::Identity => x.ln(),
            PhiProfile::Square => 1.0 - 1.0 / x,
            PhiProfile::Exp => (-1.0f64).exp() - (-x).exp(),
            PhiProfile::Custom(c) => integrate(|r| 1.0 / (c.f)(r), 1.0, x, Tolerance::TIGHT)?,
        })
    }

    fn primitive_inv(&self, g: f64) -> Result<f64> {
        let bounded = |sup: f64, x: f64| {
            if g < sup {
                Ok(x)
            } else {
                Err(domain_error(
                    "H-hat",
                    g,
                    format!("argument below {sup:e} (phi grows too fast)"),
                ))
            }
        };
        match self {
            PhiProfile::Identity => Ok(g.exp()),
            PhiProfile::Square => bounded(1.0, 1.0 / (1.0 - g)),
            PhiProfile::Exp => {
                let sup = (-1.0f64).exp();
                bounded(sup, -(sup - g).ln())
            }
            PhiProfile::Custom(c) => {
                let f = c.f.clone();
                let lo = DOMAIN_GUARD;
                solve_increasing(
                    "H-hat",
                    |x| Ok((self.primitive(x)?, 1.0 / f(x))),
                    g,
                    lo,
                    g.exp().max(2.0 * lo),
                )
            }
        }
    }
}

/// The generalized transform family for a `(φ, ψ)` envelope.
#[derive(Debug, Clone)]
pub struct GeneralizedTransforms {
    phi: PhiProfile,
    psi: PsiProfile,
    /// `û⁻¹(2)`
    anchor: f64,
    /// `G(û⁻¹(2))`
    anchor_primitive: f64,
}

impl GeneralizedTransforms {
    pub fn new(phi: PhiProfile, psi: PsiProfile) -> Result<Self> {
        if let PsiProfile::Linear { slope } = psi {
            if !(slope > 0.0) || !slope.is_finite() {
                return Err(Error::invalid(format!(
                    "linear psi slope must be positive, got {slope}"
                )));
            }
        }
        for x in [1e-3, 0.5, 1.0, 2.0, 10.0] {
            if !(psi.psi(x) > 0.0) {
                return Err(Error::invalid(format!("psi({x}) must be positive")));
            }
            if !(phi.phi(x) > 0.0) {
                return Err(Error::invalid(format!("phi({x}) must be positive")));
            }
        }
        let mut t = Self {
            phi,
            psi,
            anchor: 1.0,
            anchor_primitive: 0.0,
        };
        t.anchor = t.u_hat_inv(2.0)?;
        t.anchor_primitive = t.phi.primitive(t.anchor)?;
        Ok(t)
    }

    /// `φ(y) = y`, `ψ(r) = r/δ`: reduces to the power envelope.
    pub fn power(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("power family needs delta > 0"));
        }
        Self::new(PhiProfile::Identity, PsiProfile::Linear { slope: 1.0 / delta })
    }

    pub fn phi(&self) -> &PhiProfile {
        &self.phi
    }

    pub fn psi(&self) -> &PsiProfile {
        &self.psi
    }

    fn power_equivalent(&self) -> Option<PowerTransform> {
        match self.psi {
            PsiProfile::Linear { slope } => PowerTransform::new(1.0 / slope).ok(),
            _ => None,
        }
    }

    // ---------------------------------------------------------------- û

    pub fn u_hat(&self, y: f64) -> Result<f64> {
        check_min("u-hat", y, DOMAIN_GUARD, true)?;
        if let Some(u) = self.power_equivalent() {
            return u.eval(y);
        }
        match &self.psi {
            PsiProfile::Sqrt => {
                let s = y.sqrt();
                Ok((2.0 * s - 2.0).exp() * (s - 0.5) - 0.5)
            }
            psi => integrate(
                |x| psi.lambda(x).map(f64::exp).unwrap_or(f64::NAN),
                1.0,
                y,
                Tolerance::TIGHT,
            ),
        }
    }

    pub fn u_hat_derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("u-hat", order)?;
        check_min("u-hat", y, DOMAIN_GUARD, true)?;
        let e = self.psi.lambda(y)?.exp();
        Ok(if order == 1 { e } else { e / self.psi.psi(y) })
    }

    pub fn u_hat_inv(&self, v: f64) -> Result<f64> {
        if let Some(u) = self.power_equivalent() {
            return u
                .invert(v)
                .map_err(|_| domain_error("u-hat", v, format!("value > {:e}", u.range_min())));
        }
        // û grows at least linearly beyond 1 for every shipped profile
        let guess = if v > 0.0 { 1.0 + v } else { 0.5 };
        solve_increasing(
            "u-hat",
            |y| Ok((self.u_hat(y)?, self.u_hat_derivative(y, 1)?)),
            v,
            DOMAIN_GUARD,
            guess,
        )
    }

    // ---------------------------------------------------------------- Ĥ

    fn closed_h(&self) -> Option<LogAffineTransform> {
        match (&self.phi, &self.psi) {
            (PhiProfile::Identity, PsiProfile::Linear { slope }) => LogAffineTransform::new(1.0 / slope).ok(),
            _ => None,
        }
    }

    pub fn h_hat(&self, y: f64) -> Result<f64> {
        check_min("H-hat", y, -2.0, false)?;
        if let Some(h) = self.closed_h() {
            return h.eval(y);
        }
        let x = self.u_hat_inv(2.0 + y)?;
        Ok(self.phi.primitive(x)? - self.anchor_primitive)
    }

    pub fn h_hat_derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("H-hat", order)?;
        check_min("H-hat", y, -2.0, false)?;
        if let Some(h) = self.closed_h() {
            return h.derivative(y, order);
        }
        let x = self.u_hat_inv(2.0 + y)?;
        let d1 = self.u_hat_derivative(x, 1)?;
        let ph = self.phi.phi(x);
        Ok(if order == 1 {
            1.0 / (ph * d1)
        } else {
            let d2 = self.u_hat_derivative(x, 2)?;
            -(self.phi.dphi(x) * d1 + ph * d2) / (ph * ph * d1 * d1 * d1)
        })
    }

    pub fn h_hat_inv(&self, h: f64) -> Result<f64> {
        if let Some(t) = self.closed_h() {
            return t
                .invert(h)
                .map_err(|_| domain_error("H-hat", h, format!("value > {:e}", t.range_min())));
        }
        let x = self.phi.primitive_inv(h + self.anchor_primitive)?;
        Ok(self.u_hat(x)? - 2.0)
    }

    // ---------------------------------------------------------------- K

    fn k_unsupported(&self) -> Option<Error> {
        match self.psi {
            PsiProfile::Linear { slope } if slope <= 1.0 => Some(Error::Unsupported(format!(
                "K diverges for psi = {slope}·r (needs slope > 1, i.e. delta < 1)"
            ))),
            PsiProfile::Square => Some(Error::Unsupported("K diverges for psi = r^2".into())),
            _ => None,
        }
    }

    pub fn k(&self, x: f64) -> Result<f64> {
        if let Some(e) = self.k_unsupported() {
            return Err(e);
        }
        check_min("K", x, 0.0, true)?;
        match &self.psi {
            PsiProfile::Linear { slope } => {
                let d = 1.0 / slope;
                Ok(x.powf(1.0 - d) / (1.0 - d))
            }
            PsiProfile::Sqrt => Ok(sqrt_k(x)),
            psi => integrate(
                |z| psi.lambda(z).map(|l| (-l).exp()).unwrap_or(f64::NAN),
                0.0,
                x,
                Tolerance::TIGHT,
            ),
        }
    }

    pub fn k_derivative(&self, x: f64, order: u8) -> Result<f64> {
        if let Some(e) = self.k_unsupported() {
            return Err(e);
        }
        check_order("K", order)?;
        check_min("K", x, 0.0, true)?;
        let e = (-self.psi.lambda(x)?).exp();
        Ok(if order == 1 { e } else { -e / self.psi.psi(x) })
    }

    pub fn k_inv(&self, v: f64) -> Result<f64> {
        if let Some(e) = self.k_unsupported() {
            return Err(e);
        }
        if let PsiProfile::Linear { slope } = self.psi {
            let d = 1.0 / slope;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(domain_error("K", v, "value >= 0"));
            }
            return Ok(((1.0 - d) * v).powf(1.0 / (1.0 - d)));
        }
        solve_increasing("K", |x| Ok((self.k(x)?, self.k_derivative(x, 1)?)), v, 0.0, v.max(1.0))
    }

    // ---------------------------------------------------------------- v̂

    pub fn v_hat(&self, y: f64) -> Result<f64> {
        if let Some(e) = self.k_unsupported() {
            return Err(e);
        }
        check_min("v-hat", y, 0.0, true)?;
        match &self.psi {
            PsiProfile::Linear { slope } => Ok(y * y / (2.0 * (1.0 - 1.0 / slope))),
            PsiProfile::Sqrt => Ok(sqrt_v_hat(y)),
            psi => integrate(
                |x| match (self.k(x), psi.lambda(x)) {
                    (Ok(k), Ok(l)) => k * l.exp(),
                    _ => f64::NAN,
                },
                0.0,
                y,
                Tolerance::TIGHT,
            ),
        }
    }

    pub fn v_hat_derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("v-hat", order)?;
        check_min("v-hat", y, 0.0, true)?;
        let k = self.k(y)?;
        let e = self.psi.lambda(y)?.exp();
        Ok(if order == 1 {
            k * e
        } else {
            1.0 + k * e / self.psi.psi(y)
        })
    }

    pub fn v_hat_inv(&self, v: f64) -> Result<f64> {
        if let Some(e) = self.k_unsupported() {
            return Err(e);
        }
        if let PsiProfile::Linear { slope } = self.psi {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(domain_error("v-hat", v, "value >= 0"));
            }
            return Ok((2.0 * (1.0 - 1.0 / slope) * v).sqrt());
        }
        let guess = (2.0 * v.max(0.0)).sqrt().max(1e-3);
        solve_increasing(
            "v-hat",
            |y| Ok((self.v_hat(y)?, self.v_hat_derivative(y, 1)?)),
            v,
            0.0,
            guess,
        )
    }

    // ---------------------------------------------------------------- bounds

    /// `Φ(s, y)`; see [`phi_envelope`].
    pub fn phi_envelope(&self, s: f64, y: f64, a: &TimeFn, b: &TimeFn, gamma: &TimeFn, p: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(domain_error("Phi", y, "y > 0"));
        }
        if !(p > 1.0) {
            return Err(Error::invalid(format!("Phi needs p > 1, got {p}")));
        }
        if !(s >= 0.0) {
            return Err(Error::invalid("Phi needs s >= 0"));
        }
        let phi1 = self.phi.phi(1.0);
        let drift = a.integral(0.0, s)? / phi1 + b.integral(0.0, s)?;
        let vol = gamma.integral_sq(0.0, s)?;
        let w = self.u_hat(y.max(DOMAIN_GUARD))?.max(0.0);
        let inner = self.h_hat_inv(self.h_hat(w)? + drift)?;
        Ok((p / (2.0 * (p - 1.0)) * vol).exp() * inner.powf(p))
    }

    /// `û⁻¹(m^{1/p})` where `m` is a (conditional) mean of `Φ(T, ξ)`: the
    /// a-priori upper bound for `Y`.
    pub fn upper_bound(&self, phi_mean: f64, p: f64) -> Result<f64> {
        if !(phi_mean >= 0.0) {
            return Err(domain_error("X", phi_mean, "mean of Phi >= 0"));
        }
        self.u_hat_inv(phi_mean.powf(1.0 / p))
    }

    pub fn u_hat_view(&self) -> UHatView {
        UHatView(self.clone())
    }

    pub fn u_tilde_view(&self) -> UTildeView {
        UTildeView(self.clone())
    }

    pub fn h_hat_view(&self) -> HHatView {
        HHatView(self.clone())
    }

    pub fn k_view(&self) -> KView {
        KView(self.clone())
    }

    pub fn v_hat_view(&self) -> VHatView {
        VHatView(self.clone())
    }
}

/// `Φ(s, y; a, b, γ) = exp{p/(2(p−1)) ∫_0^s γ²} · (Ĥ⁻¹(Ĥ(û(y)⁺) + ∫_0^s (a/φ(1) + b)))^p`.
pub fn phi_envelope(
    s: f64,
    y: f64,
    a: &TimeFn,
    b: &TimeFn,
    gamma: &TimeFn,
    p: f64,
    transforms: &GeneralizedTransforms,
) -> Result<f64> {
    transforms.phi_envelope(s, y, a, b, gamma, p)
}

const SERIES_CUTOFF: f64 = 1.0;

/// `e²(½ − e^{−2√x}(√x + ½))`; power series in `√x` near 0 to avoid cancellation.
fn sqrt_k(x: f64) -> f64 {
    let s = x.sqrt();
    let e2 = 2f64.exp();
    if s >= SERIES_CUTOFF {
        return e2 * (0.5 - (-2.0 * s).exp() * (s + 0.5));
    }
    // Σ_{m≥2} (−1)^m 2^{m−1} (m−1) s^m / m!
    let mut term = s; // 2^{m-1} s^m / m! at m = 1
    let mut sum = 0.0;
    for m in 2..60 {
        term *= 2.0 * s / m as f64;
        let c = (m - 1) as f64 * term;
        sum += if m % 2 == 0 { c } else { -c };
        if c.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    e2 * sum
}

/// `e^{2√y}(√y/2 − ¼) + ¼ − ⅔y^{3/2} − y/2`; series near 0.
fn sqrt_v_hat(y: f64) -> f64 {
    let s = y.sqrt();
    if s >= SERIES_CUTOFF {
        return (2.0 * s).exp() * (0.5 * s - 0.25) + 0.25 - 2.0 / 3.0 * y * s - 0.5 * y;
    }
    // Σ_{m≥4} 2^{m−2} (m−1) s^m / m!
    let mut term = 0.25 * 16.0 * s.powi(4) / 24.0; // 2^{m-2} s^m / m! at m = 4
    let mut sum = 3.0 * term;
    for m in 5..60 {
        term *= 2.0 * s / m as f64;
        let c = (m - 1) as f64 * term;
        sum += c;
        if c < 1e-18 * sum {
            break;
        }
    }
    sum
}

macro_rules! view {
    ($name:ident, $label:literal, $lo:expr, $eval:ident, $inv:ident, $der:ident) => {
        #[derive(Debug, Clone)]
        pub struct $name(GeneralizedTransforms);

        impl $name {
            pub fn family(&self) -> &GeneralizedTransforms {
                &self.0
            }
        }

        impl Transform for $name {
            fn name(&self) -> &'static str {
                $label
            }
            fn lower_bound(&self) -> f64 {
                $lo
            }
            fn eval(&self, y: f64) -> Result<f64> {
                self.0.$eval(y)
            }
            fn invert(&self, v: f64) -> Result<f64> {
                self.0.$inv(v)
            }
            fn derivative(&self, y: f64, order: u8) -> Result<f64> {
                self.0.$der(y, order)
            }
        }
    };
}

view!(UHatView, "u-hat", DOMAIN_GUARD, u_hat, u_hat_inv, u_hat_derivative);
view!(HHatView, "H-hat", -2.0, h_hat, h_hat_inv, h_hat_derivative);
view!(KView, "K", 0.0, k, k_inv, k_derivative);
view!(VHatView, "v-hat", 0.0, v_hat, v_hat_inv, v_hat_derivative);

/// `ũ`: the indicator-weighted variant of `û`. On `y > 0` the indicator
/// `1_{r>0}` is identically one over the integration range, so `ũ = û`
/// there; the type exists so callers can name the function they rely on.
#[derive(Debug, Clone)]
pub struct UTildeView(GeneralizedTransforms);

impl Transform for UTildeView {
    fn name(&self) -> &'static str {
        "u-tilde"
    }
    fn lower_bound(&self) -> f64 {
        DOMAIN_GUARD
    }
    fn eval(&self, y: f64) -> Result<f64> {
        check_min("u-tilde", y, DOMAIN_GUARD, true)?;
        self.0.u_hat(y)
    }
    fn invert(&self, v: f64) -> Result<f64> {
        self.0.u_hat_inv(v)
    }
    fn derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_min("u-tilde", y, DOMAIN_GUARD, true)?;
        self.0.u_hat_derivative(y, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_family() -> GeneralizedTransforms {
        GeneralizedTransforms::new(PhiProfile::Identity, PsiProfile::Sqrt).unwrap()
    }

    #[test]
    fn steep_branches_invert() {
        // û and v̂ grow like e^{2√y}; the inverse must not stall on the steep side
        let f = sqrt_family();
        for y in [50.0, 300.0, 1000.0] {
            let back = f.u_hat_inv(f.u_hat(y).unwrap()).unwrap();
            assert!((back - y).abs() <= 1e-12 * y, "u-hat y={y} back={back}");
            let back = f.v_hat_inv(f.v_hat(y).unwrap()).unwrap();
            assert!((back - y).abs() <= 1e-12 * y, "v-hat y={y} back={back}");
        }
    }

    #[test]
    fn linear_psi_matches_power() {
        let g = GeneralizedTransforms::power(1.0).unwrap();
        assert!((g.u_hat(3.0).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(g.h_hat(0.0).unwrap(), 0.0);
    }

    #[test]
    fn sqrt_closed_forms_match_generic_route() {
        // the custom profile forces the quadrature code path
        let g = sqrt_family();
        let custom = GeneralizedTransforms::new(PhiProfile::Identity, PsiProfile::custom("sqrt-q", f64::sqrt)).unwrap();
        for y in [0.25, 1.0, 2.0, 9.0] {
            let a = g.u_hat(y).unwrap();
            let b = custom.u_hat(y).unwrap();
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "u-hat {y}: {a} vs {b}");
            let a = g.h_hat(y).unwrap();
            let b = custom.h_hat(y).unwrap();
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "H-hat {y}: {a} vs {b}");
            let a = g.k(y).unwrap();
            let b = custom.k(y).unwrap();
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "K {y}: {a} vs {b}");
        }
    }

    #[test]
    fn series_branches_are_continuous() {
        let below = 1.0 - 1e-12;
        let above = 1.0 + 1e-12;
        assert!((sqrt_k(below) - sqrt_k(above)).abs() < 1e-11);
        assert!((sqrt_v_hat(below) - sqrt_v_hat(above)).abs() < 1e-11);
    }

    #[test]
    fn anchors_vanish() {
        for g in [
            sqrt_family(),
            GeneralizedTransforms::new(PhiProfile::Exp, PsiProfile::Exp).unwrap(),
            GeneralizedTransforms::new(PhiProfile::Square, PsiProfile::Square).unwrap(),
        ] {
            assert!(g.h_hat(0.0).unwrap().abs() < 1e-14, "{:?}", g.psi());
            assert!(g.u_hat(1.0).unwrap().abs() < 1e-15);
        }
        assert_eq!(sqrt_family().k(0.0).unwrap(), 0.0);
    }

    #[test]
    fn divergent_k_is_reported() {
        let g = GeneralizedTransforms::new(PhiProfile::Square, PsiProfile::Square).unwrap();
        assert!(matches!(g.k(1.0), Err(Error::Unsupported(_))));
        assert!(GeneralizedTransforms::power(1.0).unwrap().k(1.0).is_err());
    }

    #[test]
    fn phi_with_zero_coefficients_is_positive_part_power() {
        let g = sqrt_family();
        let z = TimeFn::zero();
        for y in [0.3, 1.0, 2.5] {
            let want = g.u_hat(y).unwrap().max(0.0).powf(2.0);
            let got = g.phi_envelope(0.7, y, &z, &z, &z, 2.0).unwrap();
            assert!((got - want).abs() < 1e-12 * (1.0 + want));
        }
        assert_eq!(g.phi_envelope(1.0, 0.5, &z, &z, &z, 3.0).unwrap(), 0.0);
        assert!(g.phi_envelope(1.0, 0.0, &z, &z, &z, 3.0).is_err());
    }

    #[test]
    fn bounded_primitive_limits_h_hat_range() {
        let g = GeneralizedTransforms::new(PhiProfile::Exp, PsiProfile::Exp).unwrap();
        assert!(g.h_hat_inv(10.0).is_err());
    }
}
