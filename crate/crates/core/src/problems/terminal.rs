use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Terminal families with closed-form conditional moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalFamily {
    Constant(f64),
    /// `exp(σ·x_k + μ)`
    Lognormal {
        sigma: f64,
        mu: f64,
        component: usize,
    },
    /// `c0 + c1·x_k + c2·x_k²`
    Quadratic {
        c0: f64,
        c1: f64,
        c2: f64,
        component: usize,
    },
    /// Anything else; may be solved but not oracle-checked.
    Custom,
}

/// Terminal condition `ξ` as a function of the terminal state.
#[derive(Clone)]
pub struct TerminalSpec {
    label: String,
    family: TerminalFamily,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    lower_bound: Option<f64>,
    note: String,
}

impl fmt::Debug for TerminalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TerminalSpec")
            .field("label", &self.label)
            .field("family", &self.family)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl TerminalSpec {
    pub fn constant(c: f64) -> Self {
        Self {
            label: format!("const({c})"),
            family: TerminalFamily::Constant(c),
            f: Arc::new(move |_| c),
            lower_bound: (c > 0.0).then_some(c),
            note: "deterministic".into(),
        }
    }

    pub fn lognormal(sigma: f64, mu: f64) -> Self {
        Self::lognormal_component(sigma, mu, 0)
    }

    pub fn lognormal_component(sigma: f64, mu: f64, component: usize) -> Self {
        Self {
            label: format!("exp({sigma}*x{component}+{mu})"),
            family: TerminalFamily::Lognormal { sigma, mu, component },
            f: Arc::new(move |x| (sigma * x[component] + mu).exp()),
            lower_bound: None,
            note: "lognormal: all moments finite".into(),
        }
    }

    pub fn quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        let lower = if c2 > 0.0 {
            let m = c0 - c1 * c1 / (4.0 * c2);
            (m > 0.0).then_some(m)
        } else if c2 == 0.0 && c1 == 0.0 && c0 > 0.0 {
            Some(c0)
        } else {
            None
        };
        Self {
            label: format!("{c0}+{c1}*x0+{c2}*x0^2"),
            family: TerminalFamily::Quadratic {
                c0,
                c1,
                c2,
                component: 0,
            },
            f: Arc::new(move |x| c0 + c1 * x[0] + c2 * x[0] * x[0]),
            lower_bound: lower,
            note: "polynomial: all moments finite".into(),
        }
    }

    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        lower_bound: Option<f64>,
    ) -> Self {
        Self {
            label: label.into(),
            family: TerminalFamily::Custom,
            f: Arc::new(f),
            lower_bound,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_lower_bound(mut self, c: f64) -> Self {
        self.lower_bound = Some(c);
        self
    }

    /// `g ∘ ξ`, losing the family (the result is custom).
    pub fn mapped(&self, label: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f = self.f.clone();
        Self::custom(label, move |x| g(f(x)), None)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> TerminalFamily {
        self.family
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    /// Declared lower bound `c > 0`, if any.
    pub fn lower_bound(&self) -> Option<f64> {
        self.lower_bound
    }

    /// Strictly positive by declaration or by family.
    pub fn is_positive(&self) -> bool {
        matches!(self.family, TerminalFamily::Lognormal { .. }) || self.lower_bound.is_some_and(|c| c > 0.0)
    }

    /// Largest state coordinate the terminal reads (for dimension checks).
    pub fn component(&self) -> usize {
        match self.family {
            TerminalFamily::Lognormal { component, .. } | TerminalFamily::Quadratic { component, .. } => component,
            _ => 0,
        }
    }

    /// `ξ^q` within the family when possible.
    pub fn powered(&self, q: f64) -> Self {
        match self.family {
            TerminalFamily::Constant(c) => Self::constant(c.powf(q)),
            TerminalFamily::Lognormal { sigma, mu, component } => {
                Self::lognormal_component(q * sigma, q * mu, component)
            }
            _ => {
                let lb = self.lower_bound.map(|c| c.powf(q));
                let mut t = self.mapped(format!("({})^{q}", self.label), move |v| v.powf(q));
                t.lower_bound = lb;
                t
            }
        }
    }

    /// `s·ξ` for `s > 0`, within the family when possible.
    pub fn scaled(&self, s: f64) -> Self {
        let label = format!("{}*{s}", self.label);
        match self.family {
            TerminalFamily::Constant(c) => Self::constant(c * s),
            TerminalFamily::Lognormal { sigma, mu, component } => {
                Self::lognormal_component(sigma, mu + s.ln(), component).with_label(label)
            }
            TerminalFamily::Quadratic { c0, c1, c2, component } => Self {
                family: TerminalFamily::Quadratic {
                    c0: c0 * s,
                    c1: c1 * s,
                    c2: c2 * s,
                    component,
                },
                lower_bound: self.lower_bound.map(|c| c * s),
                ..self.mapped(label, move |v| v * s)
            },
            TerminalFamily::Custom => {
                let mut t = self.mapped(label, move |v| v * s);
                t.lower_bound = self.lower_bound.map(|c| c * s);
                t
            }
        }
    }

    /// `(E[ξ | x_k = x], ∂/∂x)` when the state coordinate evolves as
    /// `x + N(0, var)` until maturity.
    pub fn conditional_mean(&self, x: &[f64], var: f64) -> Option<(f64, f64)> {
        match self.family {
            TerminalFamily::Constant(c) => Some((c, 0.0)),
            TerminalFamily::Lognormal { sigma, mu, component } => {
                let m = (sigma * x[component] + mu + 0.5 * sigma * sigma * var).exp();
                Some((m, sigma * m))
            }
            TerminalFamily::Quadratic { c0, c1, c2, component } => {
                let w = x[component];
                Some((c0 + c1 * w + c2 * (w * w + var), c1 + 2.0 * c2 * w))
            }
            TerminalFamily::Custom => None,
        }
    }

    /// Checks finiteness, and positivity (at least the declared bound) when
    /// a lower bound is declared.
    pub fn check_samples<'a>(&self, states: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        for x in states {
            let v = self.eval(x);
            if !v.is_finite() {
                return Err(Error::Invariant(format!(
                    "terminal {} is not finite at {x:?}",
                    self.label
                )));
            }
            if let Some(c) = self.lower_bound {
                if !(v > 0.0) || v < c * (1.0 - 1e-12) {
                    return Err(Error::Invariant(format!(
                        "terminal {} = {v} violates declared lower bound {c}",
                        self.label
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
    fn quadratic_positivity_bound() {
        assert_eq!(TerminalSpec::quadratic(2.0, 0.0, 1.0).lower_bound(), Some(2.0));
        assert_eq!(TerminalSpec::quadratic(0.0, 0.0, 1.0).lower_bound(), None);
        assert!(TerminalSpec::lognormal(1.0, 0.0).is_positive());
        assert!(!TerminalSpec::quadratic(0.0, 1.0, 0.0).is_positive());
    }

    #[test]
    fn powered_stays_in_family() {
        let t = TerminalSpec::lognormal(0.5, 0.1).powered(3.0);
        assert_eq!(
            t.family(),
            TerminalFamily::Lognormal {
                sigma: 1.5,
                mu: 0.30000000000000004,
                component: 0
            }
        );
    }

    #[test]
    fn declared_bound_is_enforced() {
        let t = TerminalSpec::custom("neg", |x| x[0], Some(1.0));
        let pts: Vec<[f64; 1]> = vec![[2.0], [0.5]];
        assert!(t.check_samples(pts.iter().map(|p| &p[..])).is_err());
    }
}
