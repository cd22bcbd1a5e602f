use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::TimeFn;
use crate::error::{Error, Result};
use crate::transforms::GeneralizedTransforms;

/// `f(t, x, y, z)`; `x` is the state at `t`, `z` has one entry per
/// Brownian component.
pub type GeneratorFn = Arc<dyn Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync>;

#[inline]
pub fn norm(z: &[f64]) -> f64 {
    norm_sq(z).sqrt()
}

#[inline]
pub fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

/// `a(t) + b(t)·y + γ(t)|z| + δ|z|²/(2y)`.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub a: TimeFn,
    pub b: TimeFn,
    pub gamma: TimeFn,
    pub delta: f64,
}

impl Envelope {
    pub fn new(a: impl Into<TimeFn>, b: impl Into<TimeFn>, gamma: impl Into<TimeFn>, delta: f64) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            gamma: gamma.into(),
            delta,
        }
    }

    pub fn singular(delta: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, delta)
    }

    #[inline]
    pub fn bound(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        let zn2 = norm_sq(z);
        let mut v = self.a.at(t) + self.b.at(t) * y + self.gamma.at(t) * zn2.sqrt();
        if self.delta != 0.0 {
            v += self.delta * zn2 / (2.0 * y);
        }
        v
    }
}

/// `a(t) + b(t)·φ(y) + γ(t)|z| + |z|²/(2ψ(y))`.
#[derive(Debug, Clone)]
pub struct GeneralizedEnvelope {
    pub a: TimeFn,
    pub b: TimeFn,
    pub gamma: TimeFn,
    pub transforms: GeneralizedTransforms,
}

impl GeneralizedEnvelope {
    pub fn bound(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        let zn2 = norm_sq(z);
        self.a.at(t)
            + self.b.at(t) * self.transforms.phi().phi(y)
            + self.gamma.at(t) * zn2.sqrt()
            + zn2 / (2.0 * self.transforms.psi().psi(y))
    }
}

#[derive(Debug, Clone)]
pub enum EnvelopeSpec {
    Power(Envelope),
    Generalized(GeneralizedEnvelope),
}

impl EnvelopeSpec {
    pub fn bound(&self, t: f64, y: f64, z: &[f64]) -> f64 {
        match self {
            EnvelopeSpec::Power(e) => e.bound(t, y, z),
            EnvelopeSpec::Generalized(g) => g.bound(t, y, z),
        }
    }
}

#[derive(Clone)]
pub struct GeneratorSpec {
    label: String,
    f: GeneratorFn,
    envelope: Option<EnvelopeSpec>,
    singular_delta: Option<f64>,
    pure_envelope: bool,
    convex_in_yz: bool,
    nonnegative: bool,
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("label", &self.label)
            .field("envelope", &self.envelope)
            .field("singular_delta", &self.singular_delta)
            .field("pure_envelope", &self.pure_envelope)
            .finish()
    }
}

impl GeneratorSpec {
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            envelope: None,
            singular_delta: None,
            pure_envelope: false,
            convex_in_yz: false,
            nonnegative: false,
        }
    }

    pub fn zero() -> Self {
        Self::from_envelope(Envelope::singular(0.0)).with_label("zero")
    }

    /// `f` equal to its own power envelope.
    pub fn from_envelope(env: Envelope) -> Self {
        let e = env.clone();
        Self {
            label: format!("envelope(delta={})", env.delta),
            f: Arc::new(move |t, _x, y, z| e.bound(t, y, z)),
            singular_delta: Some(env.delta),
            envelope: Some(EnvelopeSpec::Power(env)),
            pure_envelope: true,
            convex_in_yz: true,
            nonnegative: true,
        }
    }

    /// `δ|z|²/(2y)`.
    pub fn singular(delta: f64) -> Self {
        Self::from_envelope(Envelope::singular(delta)).with_label(format!("singular(delta={delta})"))
    }

    /// `a + b·y`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::from_envelope(Envelope::new(a, b, 0.0, 0.0)).with_label(format!("linear(a={a},b={b})"))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_envelope(mut self, env: EnvelopeSpec) -> Self {
        if let EnvelopeSpec::Power(e) = &env {
            self.singular_delta.get_or_insert(e.delta);
        }
        self.envelope = Some(env);
        self
    }

    /// Coefficient `c` of a `c|z|²/(2y)` term the power transform with
    /// exponent `c` cancels exactly.
    pub fn with_singular_delta(mut self, delta: f64) -> Self {
        self.singular_delta = Some(delta);
        self
    }

    pub fn with_flags(mut self, convex_in_yz: bool, nonnegative: bool) -> Self {
        self.convex_in_yz = convex_in_yz;
        self.nonnegative = nonnegative;
        self
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], y: f64, z: &[f64]) -> f64 {
        (self.f)(t, x, y, z)
    }

    pub fn func(&self) -> &GeneratorFn {
        &self.f
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn envelope(&self) -> Option<&EnvelopeSpec> {
        self.envelope.as_ref()
    }

    pub fn power_envelope(&self) -> Option<&Envelope> {
        match &self.envelope {
            Some(EnvelopeSpec::Power(e)) => Some(e),
            _ => None,
        }
    }

    pub fn singular_delta(&self) -> Option<f64> {
        self.singular_delta
    }

    pub fn is_pure_envelope(&self) -> bool {
        self.pure_envelope
    }

    pub fn convex_in_yz(&self) -> bool {
        self.convex_in_yz
    }

    pub fn nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Whether `f` blows up as `y ↓ 0`.
    pub fn is_singular(&self) -> bool {
        self.singular_delta.is_some_and(|d| d != 0.0) || matches!(self.envelope, Some(EnvelopeSpec::Generalized(_)))
    }

    /// Samples `n` points with `t ∈ [0, horizon]`, `y` log-uniform on
    /// `[1e-3, 1e3]` and Gaussian `z` of log-uniform scale, and checks the
    /// declared sign and envelope.
    pub fn check_envelope(&self, horizon: f64, d: usize, n: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = vec![0.0; d.max(1)];
        let mut z = vec![0.0; d.max(1)];
        for _ in 0..n {
            let t = rng.random::<f64>() * horizon;
            let y = 10f64.powf(rng.random::<f64>() * 6.0 - 3.0);
            let scale = 10f64.powf(rng.random::<f64>() * 5.0 - 3.0);
            for v in z.iter_mut() {
                *v = scale * rng.sample::<f64, _>(StandardNormal);
            }
            let f = self.eval(t, &x, y, &z);
            if !f.is_finite() {
                return Err(Error::Invariant(format!("{}: f not finite at y={y}", self.label)));
            }
            if self.nonnegative && f < -1e-12 {
                return Err(Error::Invariant(format!("{}: f = {f} < 0 at y={y}", self.label)));
            }
            if let Some(env) = &self.envelope {
                let b = env.bound(t, y, &z);
                // absolute 1e-9 plus rounding relative to the bound's size
                if f > b + 1e-9 + 1e-13 * b.abs() {
                    return Err(Error::Invariant(format!(
                        "{}: f = {f} exceeds envelope {b} at (t={t}, y={y}, |z|={})",
                        self.label,
                        norm(&z)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_generators_certify() {
        for g in [
            GeneratorSpec::zero(),
            GeneratorSpec::singular(0.5),
            GeneratorSpec::singular(2.0),
            GeneratorSpec::linear(1.0, 1.0),
            GeneratorSpec::from_envelope(Envelope::new(0.2, 0.1, 0.3, 1.0)),
        ] {
            g.check_envelope(1.0, 2, 10_000, 5).unwrap();
        }
    }

    #[test]
    fn violation_detected() {
        let g = GeneratorSpec::custom("too-big", |_, _, y, z| norm_sq(z) / y)
            .with_envelope(EnvelopeSpec::Power(Envelope::singular(1.0)));
        assert!(g.check_envelope(1.0, 1, 10_000, 5).is_err());
    }
}
