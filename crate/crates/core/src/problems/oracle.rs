//! Closed-form solutions used as ground truth.

use std::fmt;
use std::sync::Arc;

use super::{BsdeProblem, Envelope, GeneratorSpec, TerminalFamily, TerminalSpec};
use crate::error::{Error, Result};

type YFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type ZFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// How the state coordinates evolve: `dX = vol·dW`, zero drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateLaw {
    pub horizon: f64,
    pub vol: f64,
}

impl StateLaw {
    pub fn brownian(horizon: f64) -> Self {
        Self { horizon, vol: 1.0 }
    }

    pub fn new(horizon: f64, vol: f64) -> Self {
        Self { horizon, vol }
    }

    fn var(&self, t: f64) -> f64 {
        self.vol * self.vol * (self.horizon - t).max(0.0)
    }
}

#[derive(Clone)]
pub struct OracleSolution {
    pub description: String,
    pub law: StateLaw,
    y: YFn,
    z: Option<ZFn>,
}

impl fmt::Debug for OracleSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleSolution")
            .field("description", &self.description)
            .field("law", &self.law)
            .field("has_z", &self.z.is_some())
            .finish()
    }
}

impl OracleSolution {
    pub fn y(&self, t: f64, x: &[f64]) -> f64 {
        (self.y)(t, x)
    }

    pub fn z(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        self.z.as_ref().map(|z| z(t, x))
    }

    pub fn has_z(&self) -> bool {
        self.z.is_some()
    }
}

/// `E[ξ | x_t = x]` with its derivative in the terminal's component.
fn martingale_parts(xi: &TerminalSpec, law: StateLaw) -> Result<(YFn, usize, YFn)> {
    if xi.family() == TerminalFamily::Custom {
        return Err(Error::NoClosedForm(format!("terminal {}", xi.label())));
    }
    let k = xi.component();
    let a = xi.clone();
    let b = xi.clone();
    let y: YFn = Arc::new(move |t, x| a.conditional_mean(x, law.var(t)).unwrap().0);
    let dy: YFn = Arc::new(move |t, x| b.conditional_mean(x, law.var(t)).unwrap().1);
    Ok((y, k, dy))
}

fn unit_z(dim: usize, k: usize, v: f64) -> Vec<f64> {
    let mut z = vec![0.0; dim];
    z[k] = v;
    z
}

/// `Y_t = E[ξ | F_t]` for `f ≡ 0`.
pub fn oracle_martingale(xi: &TerminalSpec, law: StateLaw) -> Result<OracleSolution> {
    let (y, k, dy) = martingale_parts(xi, law)?;
    let dim = k + 1;
    Ok(OracleSolution {
        description: format!("E[{} | F_t]", xi.label()),
        law,
        y,
        z: Some(Arc::new(move |t, x| unit_z(dim.max(x.len()), k, law.vol * dy(t, x)))),
    })
}

/// Generator `−(p−1)/(2p)·|z|²/y`, terminal `η^p`, solution `(E_t η)^p`.
pub fn oracle_power(p: f64, eta: &TerminalSpec, law: StateLaw) -> Result<(BsdeProblem, OracleSolution)> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("power oracle needs p > 1, got {p}")));
    }
    if !eta.is_positive() {
        return Err(Error::invalid("power oracle needs a strictly positive eta"));
    }
    let (m, k, dm) = martingale_parts(eta, law)?;
    let c = (p - 1.0) / (2.0 * p);
    let generator = GeneratorSpec::custom(format!("power(p={p})"), move |_, _, y, z| -c * super::norm_sq(z) / y)
        .with_singular_delta(-(p - 1.0) / p);
    let terminal = eta.powered(p);
    let dim = k + 1;
    let problem = BsdeProblem::new(generator, terminal, dim)?.with_label(format!("power(p={p}) | {}", eta.label()));
    let m2 = m.clone();
    let oracle = OracleSolution {
        description: format!("(E[{} | F_t])^{p}", eta.label()),
        law,
        y: Arc::new(move |t, x| m(t, x).powf(p)),
        z: Some(Arc::new(move |t, x| {
            unit_z(dim.max(x.len()), k, law.vol * p * m2(t, x).powf(p - 1.0) * dm(t, x))
        })),
    };
    Ok((problem, oracle))
}

/// Generator `δ|z|²/(2y)`, solution `(E_t ξ^{1+δ})^{1/(1+δ)}`.
pub fn oracle_delta(delta: f64, xi: &TerminalSpec, law: StateLaw) -> Result<(BsdeProblem, OracleSolution)> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    if !xi.is_positive() {
        return Err(Error::invalid("delta oracle needs a strictly positive terminal"));
    }
    let q = 1.0 + delta;
    let lifted = match xi.family() {
        TerminalFamily::Constant(_) | TerminalFamily::Lognormal { .. } => xi.powered(q),
        TerminalFamily::Quadratic { .. } if delta == 0.0 => xi.clone(),
        _ => return Err(Error::NoClosedForm(format!("(1+delta)-moment of {}", xi.label()))),
    };
    let (m, k, dm) = martingale_parts(&lifted, law)?;
    let dim = k + 1;
    let problem = BsdeProblem::new(GeneratorSpec::singular(delta), xi.clone(), dim)?;
    let m2 = m.clone();
    let oracle = OracleSolution {
        description: format!("(E[{}^{q} | F_t])^(1/{q})", xi.label()),
        law,
        y: Arc::new(move |t, x| m(t, x).powf(1.0 / q)),
        z: Some(Arc::new(move |t, x| {
            let mv = m2(t, x);
            unit_z(dim.max(x.len()), k, law.vol * mv.powf(1.0 / q - 1.0) / q * dm(t, x))
        })),
    };
    Ok((problem, oracle))
}

/// Generator `a + b·y`, solution `e^{bτ}E_t ξ + (a/b)(e^{bτ} − 1)`.
pub fn oracle_linear(a: f64, b: f64, xi: &TerminalSpec, law: StateLaw) -> Result<(BsdeProblem, OracleSolution)> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::invalid("linear oracle needs a >= 0 and b >= 0"));
    }
    let (m, k, dm) = martingale_parts(xi, law)?;
    let dim = k + 1;
    let problem = BsdeProblem::new(
        GeneratorSpec::from_envelope(Envelope::new(a, b, 0.0, 0.0)).with_label(format!("linear(a={a},b={b})")),
        xi.clone(),
        dim,
    )?;
    let horizon = law.horizon;
    let shift = move |tau: f64| {
        if b == 0.0 {
            a * tau
        } else {
            a / b * (b * tau).exp_m1()
        }
    };
    let oracle = OracleSolution {
        description: format!("linear ODE over E[{} | F_t]", xi.label()),
        law,
        y: Arc::new(move |t, x| {
            let tau = horizon - t;
            (b * tau).exp() * m(t, x) + shift(tau)
        }),
        z: Some(Arc::new(move |t, x| {
            unit_z(dim.max(x.len()), k, law.vol * (b * (horizon - t)).exp() * dm(t, x))
        })),
    };
    Ok((problem, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn terminal_exactness() {
        let law = StateLaw::brownian(1.0);
        let xi = TerminalSpec::lognormal(0.7, -0.2);
        let cases: Vec<(TerminalSpec, OracleSolution)> = vec![
            (xi.clone(), oracle_martingale(&xi, law).unwrap()),
            {
                let (p, o) = oracle_delta(1.5, &xi, law).unwrap();
                (p.terminal, o)
            },
            {
                let (p, o) = oracle_power(3.0, &xi, law).unwrap();
                (p.terminal, o)
            },
            {
                let (p, o) = oracle_linear(1.0, 0.5, &xi, law).unwrap();
                (p.terminal, o)
            },
        ];
        for (term, o) in cases {
            for i in 0..1000 {
                let x = [-4.0 + 8.0 * i as f64 / 999.0];
                let want = term.eval(&x);
                assert!(
                    (o.y(1.0, &x) - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{}",
                    o.description
                );
            }
        }
    }

    #[test]
    fn arithmetic_examples() {
        let law = StateLaw::brownian(1.0);
        let (_, o) = oracle_linear(1.0, 1.0, &TerminalSpec::constant(1.0), law).unwrap();
        assert!((o.y(0.0, &[0.0]) - (2.0 * E - 1.0)).abs() < 1e-14);
        let (_, o) = oracle_linear(1.0, 0.0, &TerminalSpec::constant(0.0), law).unwrap();
        assert!((o.y(0.25, &[0.0]) - 0.75).abs() < 1e-15);
        let (_, o) = oracle_power(2.0, &TerminalSpec::lognormal(1.0, 0.0), law).unwrap();
        assert!((o.y(0.0, &[0.0]) - E).abs() < 1e-14);
        let (_, o) = oracle_delta(1.0, &TerminalSpec::lognormal(1.0, 0.0), law).unwrap();
        assert!((o.y(0.0, &[0.0]) - E).abs() < 1e-14);
        let o = oracle_martingale(&TerminalSpec::quadratic(0.0, 0.0, 1.0), law).unwrap();
        assert!((o.y(0.4, &[2.0]) - 4.6).abs() < 1e-14);
    }

    #[test]
    fn delta_zero_is_martingale() {
        let law = StateLaw::brownian(2.0);
        let xi = TerminalSpec::lognormal(0.3, 0.1);
        let (_, o) = oracle_delta(0.0, &xi, law).unwrap();
        let m = oracle_martingale(&xi, law).unwrap();
        for w in [-1.0, 0.0, 2.0] {
            assert!((o.y(0.5, &[w]) - m.y(0.5, &[w])).abs() < 1e-14);
        }
    }

    #[test]
    fn unsupported_families() {
        let law = StateLaw::brownian(1.0);
        let c = TerminalSpec::custom("c", |x| x[0].abs() + 1.0, Some(1.0));
        assert!(matches!(oracle_martingale(&c, law), Err(Error::NoClosedForm(_))));
        assert!(oracle_power(1.0, &TerminalSpec::constant(2.0), law).is_err());
        assert!(oracle_delta(1.0, &TerminalSpec::quadratic(1.0, 0.0, 1.0), law).is_err());
    }

    #[test]
    fn lognormal_z_is_sigma_y() {
        let law = StateLaw::brownian(1.0);
        let (_, o) = oracle_delta(2.0, &TerminalSpec::lognormal(0.5, 0.0), law).unwrap();
        let x = [0.3];
        let z = o.z(0.2, &x).unwrap();
        assert!((z[0] - 0.5 * o.y(0.2, &x)).abs() < 1e-12);
        // Y = exp(sigma w + (1+delta) sigma^2 tau / 2)
        let want = (0.5 * 0.3 + 3.0 * 0.25 * 0.8 / 2.0f64).exp();
        assert!((o.y(0.2, &x) - want).abs() < 1e-12);
    }
}
