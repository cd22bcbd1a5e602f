//! Changes of variable that remove the `1/y` singularity from the
//! generator, with exact inverses and first/second derivatives.

mod desingularize;
mod generalized;
mod ito;
mod log_affine;
mod power;

pub use desingularize::{desingularize, BackMap, DesingularizedProblem};
pub use generalized::{
    phi_envelope, GeneralizedTransforms, HHatView, KView, PhiProfile, PsiProfile, UHatView, UTildeView, VHatView,
};
pub use ito::{EntropyTest, QuadraticTest, VTest};
pub use log_affine::LogAffineTransform;
pub use power::PowerTransform;

use crate::error::{Error, Result};

/// Smallest admissible argument for transforms defined on `(0, ∞)`.
pub const DOMAIN_GUARD: f64 = 1e-12;

/// A scalar change of variable. `invert` inverts `eval` on the branch
/// starting at [`Transform::monotone_from`], where `eval` is strictly
/// increasing.
pub trait Transform: Send + Sync {
    fn name(&self) -> &'static str;
    /// Smallest admissible argument (inclusive).
    fn lower_bound(&self) -> f64;
    fn eval(&self, y: f64) -> Result<f64>;
    fn invert(&self, v: f64) -> Result<f64>;
    fn derivative(&self, y: f64, order: u8) -> Result<f64>;
    fn monotone_from(&self) -> f64 {
        self.lower_bound()
    }
    /// Points where a piecewise definition is spliced (the function is only
    /// C² there).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

pub fn eval(t: &dyn Transform, y: f64) -> Result<f64> {
    t.eval(y)
}

pub fn invert(t: &dyn Transform, v: f64) -> Result<f64> {
    t.invert(v)
}

pub fn derivative(t: &dyn Transform, y: f64, order: u8) -> Result<f64> {
    t.derivative(y, order)
}

pub(crate) fn domain_error(transform: &'static str, value: f64, bound: impl Into<String>) -> Error {
    Error::Domain {
        transform,
        value,
        bound: bound.into(),
    }
}

pub(crate) fn check_min(transform: &'static str, y: f64, min: f64, inclusive: bool) -> Result<()> {
    let ok = if inclusive { y >= min } else { y > min };
    if ok && y.is_finite() {
        Ok(())
    } else {
        let op = if inclusive { ">=" } else { ">" };
        Err(domain_error(transform, y, format!("y {op} {min:e}")))
    }
}

pub(crate) fn check_order(transform: &'static str, order: u8) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{transform}: derivative order must be 1 or 2, got {order}"
        )))
    }
}

/// Solves `g(y) = target` for an increasing `g` on `[lo, ∞)`. `g` returns
/// the value and the slope. Safeguarded Newton inside a bisection bracket;
/// iterates until the bracket collapses to adjacent floats.
pub(crate) fn solve_increasing(
    name: &'static str,
    g: impl Fn(f64) -> Result<(f64, f64)>,
    target: f64,
    lo: f64,
    guess: f64,
) -> Result<f64> {
    if !target.is_finite() {
        return Err(domain_error(name, target, "finite value"));
    }
    let (g_lo, _) = g(lo)?;
    if target < g_lo {
        return Err(domain_error(
            name,
            target,
            format!("value >= {g_lo:e} (image of {lo:e})"),
        ));
    }
    if target == g_lo {
        return Ok(lo);
    }
    let mut a = lo;
    let mut b = guess.max(lo + 1.0);
    let mut expansions = 0;
    loop {
        let (gb, _) = g(b)?;
        if !gb.is_finite() || gb >= target {
            break;
        }
        a = b;
        b = lo + 2.0 * (b - lo);
        expansions += 1;
        if expansions > 2100 || !b.is_finite() {
            return Err(domain_error(name, target, "value inside the transform's finite range"));
        }
    }
    // geometric midpoint on wide positive brackets, so huge initial brackets
    // shrink in O(log log) steps instead of O(log)
    let split = |a: f64, b: f64| {
        if a > 0.0 && b > 4.0 * a {
            (a * b).sqrt()
        } else {
            0.5 * (a + b)
        }
    };
    let mut x = guess.clamp(a, b);
    if x == a || x == b {
        x = split(a, b);
    }
    let mut width_old = b - a;
    for _ in 0..400 {
        let (gx, dg) = g(x)?;
        if !gx.is_finite() {
            b = x;
            x = split(a, b);
            continue;
        }
        let r = gx - target;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let next = if dg > 0.0 && dg.is_finite() {
            x - r / dg
        } else {
            f64::NAN
        };
        let mid = split(a, b);
        // Newton only while it lands inside the bracket and at least halves
        // the previous step
        if next > a && next < b && 2.0 * (next - x).abs() <= width_old {
            if (next - x).abs() <= f64::EPSILON * x.abs() {
                return Ok(next);
            }
            width_old = (next - x).abs();
            x = next;
        } else {
            width_old = b - a;
            x = mid;
        }
        // adjacent floats: nothing left to resolve
        if mid <= a || mid >= b {
            break;
        }
        if (b - a) <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    // pick the better endpoint of the final bracket
    let (ga, _) = g(a)?;
    let (gb, _) = g(b)?;
    let (gx, _) = g(x)?;
    let mut best = (x, (gx - target).abs());
    for (c, gc) in [(a, ga), (b, gb)] {
        if (gc - target).abs() < best.1 {
            best = (c, (gc - target).abs());
        }
    }
    Ok(best.0)
}
