use serde::{Deserialize, Serialize};

use super::{check_min, check_order, domain_error, Transform, DOMAIN_GUARD};
use crate::error::{Error, Result};

/// `u(y) = (y^{1+δ} − 1)/(1+δ)` on `(0, ∞)`.
///
/// Exponents in `(−1, 0)` are accepted as well: the power-oracle generator
/// `−(p−1)/(2p)·|z|²/y` is removed by `δ = −(p−1)/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTransform {
    delta: f64,
}

impl PowerTransform {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > -1.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("power transform needs delta > -1, got {delta}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn k(&self) -> f64 {
        1.0 + self.delta
    }

    /// Infimum of `u` over `(0, ∞)`.
    pub fn range_min(&self) -> f64 {
        -1.0 / self.k()
    }
}

impl Transform for PowerTransform {
    fn name(&self) -> &'static str {
        "u"
    }

    fn lower_bound(&self) -> f64 {
        DOMAIN_GUARD
    }

    fn eval(&self, y: f64) -> Result<f64> {
        check_min("u", y, DOMAIN_GUARD, true)?;
        let k = self.k();
        Ok((k * y.ln()).exp_m1() / k)
    }

    fn invert(&self, v: f64) -> Result<f64> {
        let k = self.k();
        let arg = k * v;
        if !(arg > -1.0) || !v.is_finite() {
            return Err(domain_error("u", v, format!("value > {:e}", self.range_min())));
        }
        Ok((arg.ln_1p() / k).exp())
    }

    fn derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("u", order)?;
        check_min("u", y, DOMAIN_GUARD, true)?;
        let d = self.delta;
        Ok(match order {
            1 => (d * y.ln()).exp(),
            _ => d * ((d - 1.0) * y.ln()).exp(),
        })
    }
}
