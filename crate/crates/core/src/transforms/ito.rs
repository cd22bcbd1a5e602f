//! Test functions fed to Itô's formula when bounding `Z` and the singular
//! integral `∫|Z|²/Y`. None of them is monotone on its whole domain; each
//! is inverted on the branch where it increases.

use serde::{Deserialize, Serialize};

use super::{check_min, check_order, domain_error, solve_increasing, Transform, DOMAIN_GUARD};
use crate::error::{Error, Result};

/// `v`: for `δ > 1` the C² splice of `((y^{1+δ}−1)/(1+δ) − (y²−1)/2)/(δ−1)`
/// (y > 1) and `(y−1)²/2` (y ≤ 1); for `0 ≤ δ < 1` the quadratic
/// `y²/(2(1−δ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VTest {
    delta: f64,
}

impl VTest {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("v needs delta >= 0, got {delta}")));
        }
        if delta == 1.0 {
            return Err(Error::invalid("v is undefined for delta = 1"));
        }
        Ok(Self { delta })
    }

    fn spliced(&self) -> bool {
        self.delta > 1.0
    }

    fn value(&self, y: f64) -> f64 {
        let d = self.delta;
        if !self.spliced() {
            return y * y / (2.0 * (1.0 - d));
        }
        let s = y - 1.0;
        if y > 1.0 {
            let k = 1.0 + d;
            let power = (k * s.ln_1p()).exp_m1() / k;
            let square = s * (1.0 + 0.5 * s);
            (power - square) / (d - 1.0)
        } else {
            0.5 * s * s
        }
    }

    fn slope(&self, y: f64) -> f64 {
        let d = self.delta;
        if !self.spliced() {
            return y / (1.0 - d);
        }
        if y > 1.0 {
            let s = y - 1.0;
            // (y^δ − y)/(δ−1) = y·(y^{δ−1} − 1)/(δ−1)
            y * ((d - 1.0) * s.ln_1p()).exp_m1() / (d - 1.0)
        } else {
            y - 1.0
        }
    }

    fn curvature(&self, y: f64) -> f64 {
        let d = self.delta;
        if !self.spliced() {
            return 1.0 / (1.0 - d);
        }
        if y > 1.0 {
            (d * ((d - 1.0) * y.ln()).exp() - 1.0) / (d - 1.0)
        } else {
            1.0
        }
    }
}

impl Transform for VTest {
    fn name(&self) -> &'static str {
        "v"
    }

    fn lower_bound(&self) -> f64 {
        DOMAIN_GUARD
    }

    fn monotone_from(&self) -> f64 {
        if self.spliced() {
            1.0
        } else {
            DOMAIN_GUARD
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        if self.spliced() {
            vec![1.0]
        } else {
            Vec::new()
        }
    }

    fn eval(&self, y: f64) -> Result<f64> {
        check_min("v", y, DOMAIN_GUARD, true)?;
        Ok(self.value(y))
    }

    fn invert(&self, v: f64) -> Result<f64> {
        if !self.spliced() {
            let lo = self.value(DOMAIN_GUARD);
            if !(v >= lo) || !v.is_finite() {
                return Err(domain_error("v", v, format!("value >= {lo:e}")));
            }
            return Ok((2.0 * (1.0 - self.delta) * v).sqrt());
        }
        let guess = 1.0 + (2.0 * v.max(0.0)).sqrt();
        solve_increasing("v", |y| Ok((self.value(y), self.slope(y))), v, 1.0, guess)
    }

    fn derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("v", order)?;
        check_min("v", y, DOMAIN_GUARD, true)?;
        Ok(if order == 1 { self.slope(y) } else { self.curvature(y) })
    }
}

/// `ℓ(y) = y²/(2(1−δ))` on the real line, `0 ≤ δ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTest {
    delta: f64,
}

impl QuadraticTest {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid(format!("l needs 0 <= delta < 1, got {delta}")));
        }
        Ok(Self { delta })
    }
}

impl Transform for QuadraticTest {
    fn name(&self) -> &'static str {
        "l"
    }

    fn lower_bound(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn monotone_from(&self) -> f64 {
        0.0
    }

    fn eval(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(domain_error("l", y, "finite argument"));
        }
        Ok(y * y / (2.0 * (1.0 - self.delta)))
    }

    fn invert(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(domain_error("l", v, "value >= 0"));
        }
        Ok((2.0 * (1.0 - self.delta) * v).sqrt())
    }

    fn derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("l", order)?;
        if !y.is_finite() {
            return Err(domain_error("l", y, "finite argument"));
        }
        Ok(if order == 1 {
            y / (1.0 - self.delta)
        } else {
            1.0 / (1.0 - self.delta)
        })
    }
}

/// `I(y)`: `y^{δ+1}/(δ(δ+1)) − y/δ − δ/(δ+1)` for `y ≥ 1` and `y ln y − y`
/// below 1. At `δ = 0` the upper branch degenerates to `y ln y − y` as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyTest {
    delta: f64,
}

impl EntropyTest {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("I needs delta >= 0, got {delta}")));
        }
        Ok(Self { delta })
    }

    fn value(&self, y: f64) -> f64 {
        let d = self.delta;
        if y >= 1.0 && d > 0.0 {
            let ly = y.ln();
            // (y^{1+δ} − (1+δ)y)/(δ(1+δ)) written to survive small δ
            let lead = y * ((d * ly).exp_m1() - d) / (d * (1.0 + d));
            lead - d / (1.0 + d)
        } else {
            y * y.ln() - y
        }
    }

    fn slope(&self, y: f64) -> f64 {
        let d = self.delta;
        if y >= 1.0 && d > 0.0 {
            (d * y.ln()).exp_m1() / d
        } else {
            y.ln()
        }
    }

    fn curvature(&self, y: f64) -> f64 {
        let d = self.delta;
        if y >= 1.0 && d > 0.0 {
            ((d - 1.0) * y.ln()).exp()
        } else {
            1.0 / y
        }
    }
}

impl Transform for EntropyTest {
    fn name(&self) -> &'static str {
        "I"
    }

    fn lower_bound(&self) -> f64 {
        DOMAIN_GUARD
    }

    fn monotone_from(&self) -> f64 {
        1.0
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn eval(&self, y: f64) -> Result<f64> {
        check_min("I", y, DOMAIN_GUARD, true)?;
        Ok(self.value(y))
    }

    fn invert(&self, v: f64) -> Result<f64> {
        let guess = 1.0 + (2.0 * (v + 1.0).max(0.0)).sqrt();
        solve_increasing("I", |y| Ok((self.value(y), self.slope(y))), v, 1.0, guess)
    }

    fn derivative(&self, y: f64, order: u8) -> Result<f64> {
        check_order("I", order)?;
        check_min("I", y, DOMAIN_GUARD, true)?;
        Ok(if order == 1 { self.slope(y) } else { self.curvature(y) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2_at_one(t: &dyn Transform) {
        let (lo, hi) = (1.0 - 1e-8, 1.0 + 1e-8);
        let jump = |order: u8| (t.derivative(hi, order).unwrap() - t.derivative(lo, order).unwrap()).abs();
        assert!((t.eval(hi).unwrap() - t.eval(lo).unwrap()).abs() < 1e-12);
        assert!(jump(1) < 1e-7);
        assert!(jump(2) < 1e-6, "{} second derivative jump {}", t.name(), jump(2));
    }

    #[test]
    fn v_is_c2_at_splice() {
        for d in [1.5, 2.0, 4.0] {
            let v = VTest::new(d).unwrap();
            c2_at_one(&v);
            assert_eq!(v.eval(1.0).unwrap(), 0.0);
            assert!((v.derivative(1.0, 2).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn i_is_c2_at_splice() {
        for d in [0.0, 0.5, 1.0, 2.0] {
            let i = EntropyTest::new(d).unwrap();
            c2_at_one(&i);
            assert!((i.eval(1.0).unwrap() + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_one_excluded_only_for_v_and_l() {
        assert!(VTest::new(1.0).is_err());
        assert!(QuadraticTest::new(1.0).is_err());
        assert!(EntropyTest::new(1.0).is_ok());
    }

    #[test]
    fn small_delta_matches_limit() {
        let i = EntropyTest::new(1e-9).unwrap();
        let y = 3.0f64;
        assert!((i.eval(y).unwrap() - (y * y.ln() - y)).abs() < 1e-7);
    }

    #[test]
    fn branch_inversion() {
        let v = VTest::new(2.0).unwrap();
        for y in [1.0, 1.0 + 1e-6, 1.5, 30.0] {
            let back = v.invert(v.eval(y).unwrap()).unwrap();
            assert!((back - y).abs() <= 1e-12 * y, "{y} -> {back}");
        }
        let i = EntropyTest::new(0.5).unwrap();
        assert!(i.invert(-1.5).is_err());
    }
}
