use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::transforms::{
    EntropyTest, GeneralizedTransforms, LogAffineTransform, PhiProfile, PowerTransform, PsiProfile, QuadraticTest,
    Transform, VTest,
};

pub const ROUNDTRIP_TOL: f64 = 1e-12;
pub const FD_TOL: f64 = 1e-6;

/// Round-trip and finite-difference agreement of one transform.
#[derive(Debug, Clone, Serialize)]
pub struct TransformCheck {
    pub name: String,
    pub n: usize,
    /// Points on the increasing branch, where the inverse is checked.
    pub n_roundtrip: usize,
    /// `max |u⁻¹(u(y)) − y| / max(1, |y|)`.
    pub roundtrip_max: f64,
    pub roundtrip_failures: usize,
    /// Worst relative gap between analytic and central-difference
    /// derivatives (orders 1 and 2).
    pub fd_max: f64,
    pub fd_failures: usize,
    /// Sample points where the transform or its inverse returned an error.
    pub errors: usize,
    pub pass: bool,
}

/// `y` with `lower + y` log-uniform over six decades (`[1e-3, 1e3]` from
/// the lower bound), mirrored for transforms on the whole line.
fn sample_point(t: &dyn Transform, rng: &mut impl Rng) -> f64 {
    let r = 10f64.powf(rng.random::<f64>() * 6.0 - 3.0);
    let lo = t.lower_bound();
    if lo == f64::NEG_INFINITY {
        if rng.random::<bool>() {
            r
        } else {
            -r
        }
    } else if (0.0..=1e-9).contains(&lo) {
        r
    } else {
        lo + r
    }
}

fn central_step(t: &dyn Transform, y: f64) -> f64 {
    // half the distance to the lower bound keeps y - 2h inside the domain
    let mut s = y.abs().max(1e-3);
    let lo = t.lower_bound();
    if lo.is_finite() {
        s = s.min(0.5 * (y - lo));
    }
    // and the stencil on one side of every splice point
    for b in t.breakpoints() {
        if y != b {
            s = s.min(0.5 * (y - b).abs());
        }
    }
    1e-3 * s
}

/// Fourth-order central difference.
fn stencil(f: impl Fn(f64) -> Result<f64>, y: f64, h: f64) -> Result<f64> {
    Ok((f(y - 2.0 * h)? - 8.0 * f(y - h)? + 8.0 * f(y + h)? - f(y + 2.0 * h)?) / (12.0 * h))
}

fn fd_gap(t: &dyn Transform, y: f64) -> Result<f64> {
    let h = central_step(t, y);
    let d1 = t.derivative(y, 1)?;
    let d2 = t.derivative(y, 2)?;
    let fd1 = stencil(|x| t.eval(x), y, h)?;
    let fd2 = stencil(|x| t.derivative(x, 1), y, h)?;
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    };
    Ok(rel(d1, fd1).max(rel(d2, fd2)))
}

pub fn check_transform(t: &dyn Transform, label: &str, n: usize, seed: u64) -> TransformCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut n_rt, mut rt_max, mut rt_fail, mut fd_max, mut fd_fail, mut errors) = (0, 0.0f64, 0, 0.0f64, 0, 0);
    for _ in 0..n {
        let y = sample_point(t, &mut rng);
        match fd_gap(t, y) {
            Ok(g) => {
                fd_max = fd_max.max(g);
                if !(g <= FD_TOL) {
                    fd_fail += 1;
                }
            }
            Err(_) => errors += 1,
        }
        if y >= t.monotone_from() {
            n_rt += 1;
            match t.eval(y).and_then(|v| t.invert(v)) {
                Ok(back) => {
                    let e = (back - y).abs() / y.abs().max(1.0);
                    rt_max = rt_max.max(e);
                    if !(e <= ROUNDTRIP_TOL) {
                        rt_fail += 1;
                    }
                }
                Err(_) => errors += 1,
            }
        }
    }
    TransformCheck {
        name: label.to_string(),
        n,
        n_roundtrip: n_rt,
        roundtrip_max: rt_max,
        roundtrip_failures: rt_fail,
        fd_max,
        fd_failures: fd_fail,
        errors,
        pass: rt_fail == 0 && fd_fail == 0 && errors == 0,
    }
}

/// Every transform of the chain and its generalized counterparts, at
/// representative exponents; `n` sample points each.
pub fn transform_suite(n: usize, seed: u64) -> Result<Vec<TransformCheck>> {
    let family = GeneralizedTransforms::new(PhiProfile::Identity, PsiProfile::Sqrt)?;
    let mut list: Vec<(String, Box<dyn Transform>)> = Vec::new();
    for d in [0.5, 1.0, 2.0] {
        list.push((format!("u(delta={d})"), Box::new(PowerTransform::new(d)?)));
        list.push((format!("H(delta={d})"), Box::new(LogAffineTransform::new(d)?)));
    }
    for d in [0.5, 2.0] {
        list.push((format!("v(delta={d})"), Box::new(VTest::new(d)?)));
        list.push((format!("I(delta={d})"), Box::new(EntropyTest::new(d)?)));
    }
    list.push(("l(delta=0.5)".into(), Box::new(QuadraticTest::new(0.5)?)));
    let tag = "phi=identity,psi=sqrt";
    list.push((format!("u-hat({tag})"), Box::new(family.u_hat_view())));
    list.push((format!("u-tilde({tag})"), Box::new(family.u_tilde_view())));
    list.push((format!("H-hat({tag})"), Box::new(family.h_hat_view())));
    list.push((format!("K({tag})"), Box::new(family.k_view())));
    list.push((format!("v-hat({tag})"), Box::new(family.v_hat_view())));
    Ok(list
        .iter()
        .enumerate()
        .map(|(k, (label, t))| check_transform(t.as_ref(), label, n, seed.wrapping_add(k as u64)))
        .collect())
}
