use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::{integrate, Tolerance};

/// A deterministic, bounded function of time used for envelope coefficients
/// and consumption streams.
#[derive(Clone)]
pub enum TimeFn {
    Constant(f64),
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl TimeFn {
    pub fn zero() -> Self {
        TimeFn::Constant(0.0)
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFn::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            TimeFn::Constant(c) => *c,
            TimeFn::Custom { f, .. } => f(t),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TimeFn::Constant(c) => Some(*c),
            TimeFn::Custom { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    /// `∫_s^t g(r) dr`.
    pub fn integral(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            TimeFn::Constant(c) => Ok(c * (t - s)),
            TimeFn::Custom { f, .. } => integrate(|r| f(r), s, t, Tolerance::default()),
        }
    }

    /// `∫_s^t g(r)² dr`.
    pub fn integral_sq(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            TimeFn::Constant(c) => Ok(c * c * (t - s)),
            TimeFn::Custom { f, .. } => integrate(|r| f(r).powi(2), s, t, Tolerance::default()),
        }
    }

    /// `sup` over a uniform sample of `[0, horizon]`; exact for constants.
    pub fn sup_on(&self, horizon: f64) -> f64 {
        match self {
            TimeFn::Constant(c) => *c,
            TimeFn::Custom { f, .. } => (0..=256)
                .map(|i| f(horizon * i as f64 / 256.0))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Constant(c) => write!(f, "Constant({c})"),
            TimeFn::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl From<f64> for TimeFn {
    fn from(c: f64) -> Self {
        TimeFn::Constant(c)
    }
}

impl Serialize for TimeFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeFn::Constant(c) => s.serialize_f64(*c),
            TimeFn::Custom { label, .. } => s.serialize_str(label),
        }
    }
}

impl<'de> Deserialize<'de> for TimeFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(TimeFn::Constant)
    }
}
