use super::OrderedProblemPair;
use crate::error::Result;
use crate::problems::{BsdeProblem, Envelope, GeneratorSpec, TerminalSpec};

fn problem(g: GeneratorSpec, xi: TerminalSpec) -> Result<BsdeProblem> {
    BsdeProblem::new(g, xi, 1)
}

/// Six ordered pairs on scalar Brownian state. The first pair is the
/// `f ≡ 0` against `|z|²/(2y)` case whose `t = 0` gap is the Jensen gap
/// `(E ξ²)^{1/2} − E ξ`.
pub fn standard_pairs() -> Result<Vec<OrderedProblemPair>> {
    let xi = TerminalSpec::lognormal(1.0, 0.0);
    let half = TerminalSpec::lognormal(0.5, 0.0);
    let capped = TerminalSpec::custom("min(e^W, 3)", |x| x[0].exp().min(3.0), None).with_lower_bound(1e-300);
    Ok(vec![
        OrderedProblemPair::new(
            "zero vs singular(1)",
            problem(GeneratorSpec::zero(), xi.clone())?,
            problem(GeneratorSpec::singular(1.0), xi.clone())?,
            "0 <= |z|^2/(2y) for y > 0; same terminal",
        ),
        OrderedProblemPair::new(
            "terminal shift",
            problem(GeneratorSpec::zero(), xi.clone())?,
            problem(
                GeneratorSpec::zero(),
                TerminalSpec::lognormal(1.0, 0.0).mapped("e^W + 1", |v| v + 1.0),
            )?,
            "e^W <= e^W + 1; same generator",
        ),
        OrderedProblemPair::new(
            "linear intercept",
            problem(GeneratorSpec::linear(0.1, 0.1), half.clone())?,
            problem(GeneratorSpec::linear(0.2, 0.1), half.clone())?,
            "0.1 + 0.1y <= 0.2 + 0.1y",
        ),
        OrderedProblemPair::new(
            "singular exponent",
            problem(GeneratorSpec::singular(0.5), half.clone())?,
            problem(GeneratorSpec::singular(1.0), half.clone())?,
            "0.5|z|^2/(2y) <= |z|^2/(2y) for y > 0",
        ),
        OrderedProblemPair::new(
            "capped terminal",
            problem(GeneratorSpec::singular(0.5), capped)?,
            problem(GeneratorSpec::singular(0.5), xi.clone())?,
            "min(e^W, 3) <= e^W; same convex generator",
        ),
        OrderedProblemPair::new(
            "gradient drift",
            problem(GeneratorSpec::singular(0.5), half.clone())?,
            problem(GeneratorSpec::from_envelope(Envelope::new(0.0, 0.0, 0.3, 0.5)), half)?,
            "0.5|z|^2/(2y) <= 0.3|z| + 0.5|z|^2/(2y)",
        ),
    ])
}
