use super::{PowerTransform, Transform, DOMAIN_GUARD};
use crate::error::{Error, Result};
use crate::problems::{norm, norm_sq, BsdeProblem, GeneratorSpec};

/// Maps a solution `(Y⁰, Z⁰)` of the transformed problem back to `(Y, Z)`.
#[derive(Debug, Clone, Copy)]
pub struct BackMap {
    transform: PowerTransform,
}

impl BackMap {
    pub fn transform(&self) -> &PowerTransform {
        &self.transform
    }

    /// `u⁻¹(y⁰)`; values at or below the range of `u` map to the domain guard.
    pub fn y(&self, y0: f64) -> f64 {
        self.transform.invert(y0).unwrap_or(DOMAIN_GUARD).max(DOMAIN_GUARD)
    }

    /// `z⁰ / u'(y)` with `y = u⁻¹(y⁰)`, written into `out`.
    pub fn z_into(&self, y: f64, z0: &[f64], out: &mut [f64]) {
        let d1 = self.transform.derivative(y, 1).unwrap_or(f64::NAN);
        for (o, v) in out.iter_mut().zip(z0) {
            *o = v / d1;
        }
    }

    pub fn forward(&self, y: f64) -> Result<f64> {
        self.transform.eval(y)
    }
}

#[derive(Debug, Clone)]
pub struct DesingularizedProblem {
    /// Terminal `u(ξ)` and the regular transformed generator.
    pub problem: BsdeProblem,
    pub back: BackMap,
    pub delta: f64,
}

/// Applies `Y⁰ = u(Y)` with the generator's declared singular exponent.
///
/// For a generator equal to its power envelope the transformed generator is
/// `a·[(δ+1)y⁰+1]^{δ/(δ+1)} + b·[(δ+1)y⁰+1] + γ|z⁰|`. Otherwise it is
/// `u'(y)·(f(t,x,y,z) − δ|z|²/(2y))` at `y = u⁻¹(y⁰)`, `z = z⁰/u'(y)`, which
/// is regular whenever the singular part of `f` is exactly `δ|z|²/(2y)`.
pub fn desingularize(problem: &BsdeProblem) -> Result<DesingularizedProblem> {
    let gen = &problem.generator;
    let delta = gen
        .singular_delta()
        .ok_or_else(|| Error::invalid(format!("generator {} declares no singular exponent", gen.label())))?;
    if !problem.terminal.is_positive() {
        return Err(Error::invalid(format!(
            "terminal {} may take non-positive values; declare a lower bound c > 0",
            problem.terminal.label()
        )));
    }
    let u = PowerTransform::new(delta)?;
    let k = 1.0 + delta;
    // smallest admissible (δ+1)y⁰ + 1, i.e. y^{1+δ} at the domain guard
    let base_floor = DOMAIN_GUARD.powf(k);

    let transformed = match gen.power_envelope().filter(|_| gen.is_pure_envelope()) {
        Some(env) => {
            let env = env.clone();
            let expo = delta / k;
            GeneratorSpec::custom(format!("desingularized({})", gen.label()), move |t, _x, y0, z0| {
                let base = (k * y0 + 1.0).max(base_floor);
                let mut v = env.gamma.at(t) * norm(z0);
                let a = env.a.at(t);
                if a != 0.0 {
                    v += a * base.powf(expo);
                }
                let b = env.b.at(t);
                if b != 0.0 {
                    v += b * base;
                }
                v
            })
            .with_flags(false, true)
        }
        None => {
            let f = gen.func().clone();
            GeneratorSpec::custom(format!("desingularized({})", gen.label()), move |t, x, y0, z0| {
                let y = u.invert(y0).unwrap_or(DOMAIN_GUARD).max(DOMAIN_GUARD);
                let d1 = (delta * y.ln()).exp();
                let mut z = [0.0f64; 8];
                let z = if z0.len() <= 8 {
                    for (o, v) in z.iter_mut().zip(z0) {
                        *o = v / d1;
                    }
                    &z[..z0.len()]
                } else {
                    return f64::NAN;
                };
                d1 * (f(t, x, y, z) - delta * norm_sq(z) / (2.0 * y))
            })
        }
    };

    let terminal = problem
        .terminal
        .mapped(format!("u({})", problem.terminal.label()), move |v| {
            u.eval(v).unwrap_or(f64::NAN)
        });
    let mut out =
        BsdeProblem::new(transformed, terminal, problem.dim)?.with_label(format!("desingularized({})", problem.label));
    out.forward = problem.forward.clone();
    out.notes = problem.notes.clone();
    Ok(DesingularizedProblem {
        problem: out,
        back: BackMap { transform: u },
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Envelope, TerminalSpec};

    #[test]
    fn pure_singular_becomes_zero() {
        let p = BsdeProblem::new(GeneratorSpec::singular(1.5), TerminalSpec::lognormal(1.0, 0.0), 1).unwrap();
        let d = desingularize(&p).unwrap();
        for (y0, z) in [(0.3, 1.2), (-0.1, -4.0), (10.0, 0.0)] {
            assert_eq!(d.problem.generator.eval(0.2, &[0.0], y0, &[z]), 0.0);
        }
        // terminal u(ξ) with δ = 1.5
        let x = [0.4];
        let xi = (0.4f64).exp();
        let want = (xi.powf(2.5) - 1.0) / 2.5;
        assert!((d.problem.terminal.eval(&x) - want).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_general_route() {
        let env = Envelope::new(0.7, 0.3, 0.4, 2.0);
        let pure = BsdeProblem::new(
            GeneratorSpec::from_envelope(env.clone()),
            TerminalSpec::constant(2.0),
            1,
        )
        .unwrap();
        let e2 = env.clone();
        let opaque = GeneratorSpec::custom("opaque", move |t, _, y, z| e2.bound(t, y, z)).with_singular_delta(2.0);
        let general = BsdeProblem::new(opaque, TerminalSpec::constant(2.0), 1).unwrap();
        let a = desingularize(&pure).unwrap();
        let b = desingularize(&general).unwrap();
        for (y0, z0) in [(0.1, 0.5), (3.0, -2.0), (40.0, 7.0)] {
            let fa = a.problem.generator.eval(0.5, &[0.0], y0, &[z0]);
            let fb = b.problem.generator.eval(0.5, &[0.0], y0, &[z0]);
            assert!((fa - fb).abs() < 1e-12 * (1.0 + fa.abs()), "{fa} vs {fb}");
        }
    }

    #[test]
    fn delta_zero_is_a_shift() {
        let p = BsdeProblem::new(GeneratorSpec::singular(0.0), TerminalSpec::constant(3.0), 1).unwrap();
        let d = desingularize(&p).unwrap();
        assert_eq!(d.problem.terminal.eval(&[0.0]), 2.0);
        assert!((d.back.y(2.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejections() {
        let nonpos = BsdeProblem::new(GeneratorSpec::singular(1.0), TerminalSpec::quadratic(0.0, 1.0, 0.0), 1).unwrap();
        assert!(desingularize(&nonpos).is_err());
        let undeclared = BsdeProblem::new(
            GeneratorSpec::custom("f", |_, _, _, _| 0.0),
            TerminalSpec::constant(1.0),
            1,
        )
        .unwrap();
        assert!(desingularize(&undeclared).is_err());
    }
}
