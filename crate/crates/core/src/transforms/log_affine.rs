use serde::{Deserialize, Serialize};

use super::{check_min, check_order, domain_error, Transform};
use crate::error::{Error, Result};

/// `H(y) = ∫_2^{2+y} dr/((1+δ)r + 1)` on `(−2, ∞)`, in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogAffineTransform {
    delta: f64,
}

impl LogAffineTransform {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!(
                "log-affine transform needs delta >= 0, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn k(&self) -> f64 {
        1.0 + self.delta
    }

    /// `H(−2+)`.
    pub fn range_min(&self) -> f64 {
        let k = self.k();
        -(2.0 * k + 1.0).ln() / k
    }
}

impl Transform for LogAffineTransform {
    fn name(&self) -> &'static str {
        "H"
    }

    fn lower_bound(&self) -> f64 {
        -2.0
    }

    fn eval(&self, y: f64) -> Result<f64> {
        check_min("H", y, -2.0, false)?;
        let k = self.k();
        Ok((k * y / (2.0 * k + 1.0)).ln_1p() / k)
    }

    fn invert(&self, v: f64) -> Result<f64> {
        if !(v > self.range_min()) || !v.is_finite() {
            return Err(domain_error("H", v, format!("value > {:e}", self.range_min())));
        }
        let k = self.k();
        Ok((k * v).exp_m1() * (2.0 * k + 1.0) / k)
    }

    fn derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("H", order)?;
        check_min("H", y, -2.0, false)?;
        let k = self.k();
        let den = k * (2.0 + y) + 1.0;
        Ok(match order {
            1 => 1.0 / den,
            _ => -k / (den * den),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_origin() {
        for d in [0.0, 0.5, 1.0, 3.0] {
            assert_eq!(LogAffineTransform::new(d).unwrap().eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_log_ratio_form() {
        let h = LogAffineTransform::new(2.0).unwrap();
        for y in [-1.5, 0.3, 7.0, 1e4] {
            let direct = ((3.0 * (2.0 + y) + 1.0) / 7.0f64).ln() / 3.0;
            assert!((h.eval(y).unwrap() - direct).abs() < 1e-14 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn rejects_below_minus_two() {
        let h = LogAffineTransform::new(1.0).unwrap();
        assert!(h.eval(-2.0).is_err());
        assert!(h.invert(h.range_min()).is_err());
    }
}
