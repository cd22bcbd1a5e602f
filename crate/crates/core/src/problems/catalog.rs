//! String-addressable problem catalog, e.g. `delta-power:delta=1,sigma=1`.

use std::collections::BTreeMap;

use super::{
    oracle_delta, oracle_linear, oracle_martingale, oracle_power, BsdeProblem, GeneratorSpec, OracleSolution, StateLaw,
    TerminalSpec,
};
use crate::error::{Error, Result};

pub struct CatalogEntry {
    pub id: String,
    pub problem: BsdeProblem,
    pub oracle: Option<OracleSolution>,
}

/// Known problem kinds and the parameters each accepts (besides terminal keys).
pub const KINDS: &[(&str, &[&str])] = &[
    ("martingale", &[]),
    ("delta-power", &["delta"]),
    ("power", &["p"]),
    ("linear", &["a", "b"]),
];

const TERMINAL_KEYS: &[&str] = &["sigma", "mu", "const", "q0", "q1", "q2"];

fn parse_params(kind: &str, body: &str, allowed: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for part in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("problem '{kind}': expected key=value, got '{part}'")))?;
        let k = k.trim();
        if !allowed.contains(&k) && !TERMINAL_KEYS.contains(&k) {
            return Err(Error::Config(format!("problem '{kind}': unknown parameter '{k}'")));
        }
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("problem '{kind}': '{k}' is not a number")))?;
        if out.insert(k.to_string(), v).is_some() {
            return Err(Error::Config(format!("problem '{kind}': duplicate parameter '{k}'")));
        }
    }
    Ok(out)
}

fn terminal_from(params: &BTreeMap<String, f64>) -> Result<TerminalSpec> {
    let has_q = ["q0", "q1", "q2"].iter().any(|k| params.contains_key(*k));
    let has_ln = params.contains_key("sigma") || params.contains_key("mu");
    match (params.get("const"), has_q, has_ln) {
        (Some(&c), false, false) => Ok(TerminalSpec::constant(c)),
        (None, true, false) => Ok(TerminalSpec::quadratic(
            params.get("q0").copied().unwrap_or(0.0),
            params.get("q1").copied().unwrap_or(0.0),
            params.get("q2").copied().unwrap_or(0.0),
        )),
        (None, false, _) => Ok(TerminalSpec::lognormal(
            params.get("sigma").copied().unwrap_or(1.0),
            params.get("mu").copied().unwrap_or(0.0),
        )),
        _ => Err(Error::Config(
            "terminal: choose one of const=..., q0/q1/q2=..., or sigma/mu=...".into(),
        )),
    }
}

/// Resolves a catalog id against a horizon. The state is the Brownian motion.
pub fn catalog(id: &str, horizon: f64) -> Result<CatalogEntry> {
    let (kind, body) = id.split_once(':').unwrap_or((id, ""));
    let kind = kind.trim();
    let allowed = KINDS.iter().find(|(k, _)| *k == kind).map(|(_, a)| *a).ok_or_else(|| {
        let names: Vec<&str> = KINDS.iter().map(|(k, _)| *k).collect();
        Error::Config(format!("unknown problem kind '{kind}' (known: {})", names.join(", ")))
    })?;
    let params = parse_params(kind, body, allowed)?;
    let xi = terminal_from(&params)?;
    let law = StateLaw::brownian(horizon);
    let get = |k: &str| {
        params
            .get(k)
            .copied()
            .ok_or_else(|| Error::Config(format!("problem '{kind}': missing parameter '{k}'")))
    };
    let (problem, oracle) = match kind {
        "martingale" => {
            let p = BsdeProblem::new(GeneratorSpec::zero(), xi.clone(), 1)?;
            (p, oracle_martingale(&xi, law).ok())
        }
        "delta-power" => {
            let d = get("delta")?;
            match oracle_delta(d, &xi, law) {
                Ok((p, o)) => (p, Some(o)),
                Err(Error::NoClosedForm(_)) => (BsdeProblem::new(GeneratorSpec::singular(d), xi, 1)?, None),
                Err(e) => return Err(e),
            }
        }
        "power" => {
            let (p, o) = oracle_power(get("p")?, &xi, law)?;
            (p, Some(o))
        }
        "linear" => {
            let (p, o) = oracle_linear(get("a")?, get("b")?, &xi, law)?;
            (p, Some(o))
        }
        _ => unreachable!(),
    };
    Ok(CatalogEntry {
        id: id.to_string(),
        problem: problem.with_label(id),
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_documented_id() {
        let e = catalog("delta-power:delta=1,sigma=1", 1.0).unwrap();
        let y0 = e.oracle.unwrap().y(0.0, &[0.0]);
        assert!((y0 - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_ids() {
        assert!(catalog("nope:x=1", 1.0).is_err());
        assert!(catalog("power:q=1", 1.0).is_err());
        assert!(catalog("power", 1.0).is_err());
        assert!(catalog("linear:a=1,b=0,const=0,sigma=1", 1.0).is_err());
    }

    #[test]
    fn constant_terminal() {
        let e = catalog("linear:a=1,b=0,const=0", 2.0).unwrap();
        assert!((e.oracle.unwrap().y(0.0, &[0.0]) - 2.0).abs() < 1e-15);
    }
}
