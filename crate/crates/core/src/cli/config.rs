//! TOML run configuration. Every table rejects unknown keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{Boundary, PdeGrid};
use crate::problems::{catalog, BsdeProblem, Envelope, GeneratorSpec, OracleSolution, TerminalSpec};
use crate::solver::SolverConfig;
use crate::verify::SuiteConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Overridden by `--seed`; feeds the ensemble and every battery.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub problem: Option<ProblemDef>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub pde: Option<PdeDef>,
    #[serde(default)]
    pub cross_validate: Option<CrossValidateDef>,
    #[serde(default)]
    pub suite: Option<SuiteConfig>,
    #[serde(default)]
    pub sdu: Option<SduDef>,
    #[serde(default)]
    pub cert_equiv: Option<CertEquivDef>,
    #[serde(default)]
    pub gen_paths: Option<GenPathsDef>,
    #[serde(default)]
    pub output: OutputDef,
}

/// A catalog id, or an inline generator and terminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDef {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub generator: Option<GeneratorDef>,
    #[serde(default)]
    pub terminal: Option<TerminalDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorDef {
    Zero,
    /// `δ|z|²/(2y)`.
    Singular {
        delta: f64,
    },
    /// `a + b·y`.
    Linear {
        a: f64,
        b: f64,
    },
    /// `a + b·y + γ|z| + δ|z|²/(2y)`.
    Envelope {
        a: f64,
        b: f64,
        gamma: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TerminalDef {
    /// `exp(σ·W_T + μ)`.
    Lognormal {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        mu: f64,
    },
    Constant {
        value: f64,
    },
    /// `c0 + c1·W_T + c2·W_T²`.
    Quadratic {
        c0: f64,
        c1: f64,
        c2: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryDef {
    LogLinear,
    /// Closed-form boundary values; needs a problem with an oracle.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeDef {
    #[serde(default = "x_min")]
    pub x_min: f64,
    #[serde(default = "x_max")]
    pub x_max: f64,
    #[serde(default = "nodes")]
    pub n_x: usize,
    #[serde(default = "nodes")]
    pub n_t: usize,
    #[serde(default = "horizon")]
    pub horizon: f64,
    #[serde(default = "log_linear")]
    pub boundary: BoundaryDef,
    #[serde(default = "pde_floor")]
    pub floor: f64,
    /// State volatility `σ` in `∂_t u + σ²/2 ∂_xx u + f = 0`.
    #[serde(default = "one")]
    pub sigma: f64,
}

impl Default for PdeDef {
    fn default() -> Self {
        Self {
            x_min: x_min(),
            x_max: x_max(),
            n_x: nodes(),
            n_t: nodes(),
            horizon: horizon(),
            boundary: log_linear(),
            floor: pde_floor(),
            sigma: 1.0,
        }
    }
}

fn x_min() -> f64 {
    -6.0
}
fn x_max() -> f64 {
    6.0
}
fn nodes() -> usize {
    400
}
fn horizon() -> f64 {
    1.0
}
fn log_linear() -> BoundaryDef {
    BoundaryDef::LogLinear
}
fn pde_floor() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossValidateDef {
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SduDef {
    /// Epstein-Zin parameters; `rho = 0` drops the aggregator (`F ≡ 0`).
    #[serde(default = "rho")]
    pub rho: f64,
    #[serde(default = "gamma_ez")]
    pub gamma: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "one")]
    pub consumption: f64,
    /// Terminal `−min(e^{σW_T}, cap) − margin`.
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "cap")]
    pub cap: f64,
    #[serde(default = "margin")]
    pub margin: f64,
    #[serde(default = "draws")]
    pub draws: usize,
    #[serde(default = "bound")]
    pub bound: f64,
}

impl Default for SduDef {
    fn default() -> Self {
        Self {
            rho: rho(),
            gamma: gamma_ez(),
            eta: 0.0,
            consumption: 1.0,
            sigma: 1.0,
            cap: cap(),
            margin: margin(),
            draws: draws(),
            bound: bound(),
        }
    }
}

fn rho() -> f64 {
    2.0
}
fn gamma_ez() -> f64 {
    1.5
}
fn cap() -> f64 {
    3.0
}
fn margin() -> f64 {
    0.5
}
fn draws() -> usize {
    20
}
fn bound() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertEquivDef {
    /// Terminal `−clamp(e^{σW_T}, 1/k, k)`.
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "clip")]
    pub k: f64,
    /// Constant ambiguity coefficient `γ ≥ 0`.
    #[serde(default)]
    pub gamma: f64,
}

impl Default for CertEquivDef {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            k: clip(),
            gamma: 0.0,
        }
    }
}

fn clip() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenPathsDef {
    #[serde(default = "one_usize")]
    pub dim: usize,
}

impl Default for GenPathsDef {
    fn default() -> Self {
        Self { dim: 1 }
    }
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDef {
    /// Paths written to the `Y`/`Z` field CSVs; `0` writes every path.
    #[serde(default = "field_paths")]
    pub field_paths: usize,
}

impl Default for OutputDef {
    fn default() -> Self {
        Self {
            field_paths: field_paths(),
        }
    }
}

fn field_paths() -> usize {
    1000
}

/// A schema error with the 1-based line it refers to, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Line of `key` inside `[section]` (top level when `section` is empty);
/// the section header itself when `key` is empty.
pub fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = "";
    for (n, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if key.is_empty() && current == section {
                return Some(n + 1);
            }
        } else if current == section && !key.is_empty() && line.split('=').next().map(str::trim) == Some(key) {
            return Some(n + 1);
        }
    }
    None
}

impl RunConfig {
    pub fn parse(src: &str) -> std::result::Result<Self, SchemaError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| SchemaError {
            line: e
                .span()
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    /// Semantic checks that serde cannot express.
    fn validate(&self, src: &str) -> std::result::Result<(), SchemaError> {
        let anchored = |section: &str, key: &str, e: Error| SchemaError {
            line: locate(src, section, key).or_else(|| locate(src, section, "")),
            message: e.to_string(),
        };
        if let Some(s) = &self.solver {
            if let Err(e) = s.validate() {
                let key = [
                    "n_paths",
                    "n_steps",
                    "horizon",
                    "picard_iters",
                    "picard_tol",
                    "y_floor",
                    "basis",
                ]
                .into_iter()
                .find(|k| e.to_string().contains(k))
                .unwrap_or("");
                return Err(anchored("solver", key, e));
            }
        }
        if let Some(s) = &self.suite {
            s.validate().map_err(|e| anchored("suite", "", e))?;
        }
        if let Some(p) = &self.problem {
            match (&p.id, &p.generator, &p.terminal) {
                (Some(_), None, None) | (None, Some(_), Some(_)) => {}
                _ => {
                    return Err(anchored(
                        "problem",
                        "",
                        Error::Config("[problem] needs either `id` or both `generator` and `terminal`".into()),
                    ))
                }
            }
            if let Some(id) = &p.id {
                catalog(id, 1.0).map_err(|e| anchored("problem", "id", e))?;
            }
        }
        if let Some(g) = &self.pde {
            PdeGrid::new(g.x_min, g.x_max, g.n_x, g.n_t, g.horizon, Boundary::LogLinear)
                .map_err(|e| anchored("pde", "", e))?;
            if !(g.floor > 0.0) || !(g.sigma > 0.0) {
                return Err(anchored(
                    "pde",
                    "",
                    Error::Config("pde floor and sigma must be positive".into()),
                ));
            }
        }
        if let Some(g) = &self.gen_paths {
            if g.dim == 0 {
                return Err(anchored("gen_paths", "dim", Error::Config("dim must be >= 1".into())));
            }
        }
        if let Some(s) = &self.sdu {
            if s.draws == 0 || !(s.bound > 0.0) || !(s.cap > 0.0) || !(s.margin > 0.0) {
                return Err(anchored(
                    "sdu",
                    "",
                    Error::Config("sdu draws, bound, cap and margin must be positive".into()),
                ));
            }
        }
        if let Some(c) = &self.cert_equiv {
            if !(c.k > 1.0) || !(c.gamma >= 0.0) {
                return Err(anchored(
                    "cert_equiv",
                    "",
                    Error::Config("cert_equiv needs k > 1 and gamma >= 0".into()),
                ));
            }
        }
        Ok(())
    }
}

pub struct ResolvedProblem {
    pub label: String,
    pub problem: BsdeProblem,
    pub oracle: Option<OracleSolution>,
}

impl ProblemDef {
    pub fn resolve(&self, horizon: f64) -> Result<ResolvedProblem> {
        if let Some(id) = &self.id {
            let e = catalog(id, horizon)?;
            return Ok(ResolvedProblem {
                label: e.id,
                problem: e.problem,
                oracle: e.oracle,
            });
        }
        let (g, xi) = match (&self.generator, &self.terminal) {
            (Some(g), Some(t)) => (g, t),
            _ => return Err(Error::Config("[problem] needs `id` or `generator` + `terminal`".into())),
        };
        let generator = match *g {
            GeneratorDef::Zero => GeneratorSpec::zero(),
            GeneratorDef::Singular { delta } => GeneratorSpec::singular(delta),
            GeneratorDef::Linear { a, b } => GeneratorSpec::linear(a, b),
            GeneratorDef::Envelope { a, b, gamma, delta } => {
                GeneratorSpec::from_envelope(Envelope::new(a, b, gamma, delta))
            }
        };
        let terminal = match *xi {
            TerminalDef::Lognormal { sigma, mu } => TerminalSpec::lognormal(sigma, mu),
            TerminalDef::Constant { value } => TerminalSpec::constant(value),
            TerminalDef::Quadratic { c0, c1, c2 } => TerminalSpec::quadratic(c0, c1, c2),
        };
        let label = format!("{} / {}", generator.label(), terminal.label());
        Ok(ResolvedProblem {
            problem: BsdeProblem::new(generator, terminal, 1)?.with_label(label.clone()),
            label,
            oracle: None,
        })
    }
}

impl PdeDef {
    pub fn grid(&self, oracle: Option<&OracleSolution>) -> Result<PdeGrid> {
        let boundary = match (self.boundary, oracle) {
            (BoundaryDef::LogLinear, _) => Boundary::LogLinear,
            (BoundaryDef::Oracle, Some(o)) => Boundary::from_oracle(o),
            (BoundaryDef::Oracle, None) => {
                return Err(Error::Config(
                    "boundary = \"oracle\" needs a catalog problem with a closed form".into(),
                ))
            }
        };
        PdeGrid::new(self.x_min, self.x_max, self.n_x, self.n_t, self.horizon, boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::BasisKind;

    #[test]
    fn full_schema_parses() {
        let src = r#"
seed = 3

[problem]
id = "delta-power:delta=1,sigma=1"

[solver]
n_steps = 16
n_paths = 1000
mode = "direct"
basis = { kind = "local-polynomial", n_bins = 10, degree = 2 }

[pde]
n_x = 64
n_t = 64
boundary = "oracle"

[sdu]
eta = 0.02

[suite]
path_scale = 0.1
batteries = ["pde", "transforms"]
"#;
        let c = RunConfig::parse(src).unwrap();
        assert_eq!(c.seed, Some(3));
        let s = c.solver.unwrap();
        assert_eq!(s.basis.kind, BasisKind::LocalPolynomial { n_bins: 10, degree: 2 });
        assert_eq!(c.suite.unwrap().batteries.len(), 2);
        assert_eq!(c.pde.unwrap().n_x, 64);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let e = RunConfig::parse("seed = 1\n[solver]\nn_steps = 4\nn_paths = 10\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(5), "{e}");
        assert!(e.message.contains("bogus"), "{e}");
        let e = RunConfig::parse(
            "[solver]\nn_steps = 4\nn_paths = 10\nbasis = { kind = \"polynomial\", degree = 2, extra = 1 }\n",
        )
        .unwrap_err();
        assert!(e.message.contains("extra"), "{e}");
        assert!(RunConfig::parse("colour = 1\n").is_err());
        assert!(RunConfig::parse("[suite]\nbatteries = [\"nope\"]\n").is_err());
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let e = RunConfig::parse("[solver]\nn_steps = 4\n\nn_paths = 1\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().contains("n_paths < 2"), "{e}");
        let e = RunConfig::parse("[problem]\nid = \"nope\"\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(RunConfig::parse("[problem]\n").is_err());
    }

    #[test]
    fn inline_problem_resolves() {
        let c = RunConfig::parse(
            "[problem]\ngenerator = { kind = \"singular\", delta = 0.5 }\nterminal = { kind = \"lognormal\" }\n",
        )
        .unwrap();
        let r = c.problem.unwrap().resolve(1.0).unwrap();
        assert!(r.oracle.is_none());
        assert_eq!(r.problem.generator.singular_delta(), Some(0.5));
    }
}
