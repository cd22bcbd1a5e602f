use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type CoeffFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Drift `B(t, x)` and volatility `σ(t, x)` of a scalar forward SDE
/// `dX = B dt + σ dW`, with a declared Lipschitz/growth constant `J`.
#[derive(Clone)]
pub struct SdeCoefficients {
    drift: CoeffFn,
    vol: CoeffFn,
    lipschitz: f64,
    /// Set when `B ≡ 0` and `σ` is this constant, which is what the
    /// closed-form oracles need.
    constant_vol: Option<f64>,
    label: String,
}

impl SdeCoefficients {
    pub fn new(
        label: impl Into<String>,
        drift: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        vol: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Self {
        Self {
            drift: Arc::new(drift),
            vol: Arc::new(vol),
            lipschitz,
            constant_vol: None,
            label: label.into(),
        }
    }

    /// `B ≡ 0`, `σ ≡ sigma`.
    pub fn brownian(sigma: f64) -> Self {
        Self {
            drift: Arc::new(|_, _| 0.0),
            vol: Arc::new(move |_, _| sigma),
            lipschitz: sigma.abs(),
            constant_vol: Some(sigma),
            label: format!("brownian(sigma={sigma})"),
        }
    }

    #[inline]
    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    #[inline]
    pub fn vol(&self, t: f64, x: f64) -> f64 {
        (self.vol)(t, x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn constant_vol(&self) -> Option<f64> {
        self.constant_vol
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Samples `n` points of `[0, horizon] × [x_min, x_max]` and checks
    /// `|B(t,0)| + |σ(t,x)| ≤ J` and the Lipschitz quotients in `x`.
    pub fn check(&self, horizon: f64, x_min: f64, x_max: f64, n: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = self.lipschitz * (1.0 + 1e-12) + 1e-12;
        for _ in 0..n {
            let t = rng.random::<f64>() * horizon;
            let x = x_min + rng.random::<f64>() * (x_max - x_min);
            let x2 = x_min + rng.random::<f64>() * (x_max - x_min);
            if self.drift(t, 0.0).abs() + self.vol(t, x).abs() > j {
                return Err(Error::Invariant(format!(
                    "{}: |B(t,0)| + |sigma(t,x)| exceeds J = {} at (t={t}, x={x})",
                    self.label, self.lipschitz
                )));
            }
            if x != x2 {
                let q = ((self.drift(t, x) - self.drift(t, x2)).abs() + (self.vol(t, x) - self.vol(t, x2)).abs())
                    / (x - x2).abs();
                if q > j {
                    return Err(Error::Invariant(format!(
                        "{}: Lipschitz quotient {q} exceeds J = {}",
                        self.label, self.lipschitz
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SdeCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeCoefficients")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("constant_vol", &self.constant_vol)
            .finish()
    }
}

/// Markovian forward state started at `x0`.
#[derive(Debug, Clone)]
pub struct ForwardSde {
    pub coeffs: SdeCoefficients,
    pub x0: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_passes_check() {
        SdeCoefficients::brownian(1.0).check(1.0, -6.0, 6.0, 10_000, 1).unwrap();
    }

    #[test]
    fn understated_constant_fails() {
        let c = SdeCoefficients::new("ou", |_, x| -3.0 * x, |_, _| 1.0, 2.0);
        assert!(c.check(1.0, -6.0, 6.0, 10_000, 1).is_err());
    }
}
