use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{ResolvedProblem, RunConfig};
use super::Command;
use crate::error::{Error, Result};
use crate::finance::{
    certainty_equivalent, certainty_equivalent_quadrature, clipped_lognormal_loss, epstein_zin_generator,
    robustness_battery, RobustSduSpec,
};
use crate::pde::{fk_cross_validate, solve_semilinear, SdeCoefficients};
use crate::problems::TimeFn;
use crate::solver::{resolve_mode, solve, SolveMode, SolverConfig};
use crate::stochastic::{PathEnsemble, RegressionBasis, TimeGrid};
use crate::transforms::PsiProfile;
use crate::verify::{run_suite, Check};

/// Output directory of one run; the last path component is derived from
/// the command and the effective configuration.
pub struct RunDir {
    pub path: PathBuf,
    pub artifacts: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, command: Command, hash: &str) -> Result<Self> {
        let path = root.join(format!("{}-{}", command.name(), &hash[..16]));
        fs::create_dir_all(&path)?;
        Ok(Self {
            path,
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let mut f = fs::File::create(self.path.join(name))?;
        f.write_all(bytes)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        self.write(name, &bytes)
    }
}

/// `sha256` of the command name and the canonical JSON of the effective
/// configuration.
pub fn config_hash(command: Command, cfg: &RunConfig) -> String {
    let canonical = serde_json::to_string(&serde_json::to_value(cfg).expect("config serializes")).expect("json");
    let mut h = Sha256::new();
    h.update(command.name().as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Value,
    pub checks: Vec<Check>,
    pub results: Value,
    pub artifacts: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&v).expect("json")
    }
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: Value,
    /// Human-readable summary for `--verbose`.
    pub summary: String,
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn solver_or(
    cfg: &RunConfig,
    seed: u64,
    n_steps: usize,
    n_paths: usize,
    basis: RegressionBasis,
    mode: SolveMode,
) -> SolverConfig {
    let s = cfg
        .solver
        .clone()
        .unwrap_or_else(|| SolverConfig::new(n_steps, n_paths).with_basis(basis).with_mode(mode));
    s.with_seed(seed)
}

fn problem(cfg: &RunConfig, command: Command, horizon: f64) -> Result<ResolvedProblem> {
    cfg.problem
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} needs a [problem] table", command.name())))?
        .resolve(horizon)
}

fn ensemble(s: &SolverConfig, dim: usize) -> Result<PathEnsemble> {
    PathEnsemble::sample(&TimeGrid::new(s.horizon, s.n_steps)?, dim, s.n_paths, s.seed)
}

pub fn execute(command: Command, cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    match command {
        Command::SolveBsde => solve_bsde(cfg, seed, dir),
        Command::SolvePde => solve_pde(cfg, dir),
        Command::CrossValidate => cross_validate(cfg, seed, dir),
        Command::RunSuite => suite(cfg, seed, dir),
        Command::Sdu => sdu(cfg, seed, dir),
        Command::CertEquiv => cert_equiv(cfg, seed, dir),
        Command::GenPaths => gen_paths(cfg, seed, dir),
    }
}

fn solve_bsde(cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    let s = solver_or(cfg, seed, 64, 20_000, RegressionBasis::polynomial(4), SolveMode::Auto);
    let p = problem(cfg, Command::SolveBsde, s.horizon)?;
    let paths = ensemble(&s, p.problem.dim)?;
    let sol = solve(&p.problem, &paths, &s)?;
    let mut checks = vec![Check::holds(
        "picard-converged",
        sol.is_converged(),
        "fixed-point residual",
    )];
    let oracle_y0 = p.oracle.as_ref().map(|o| o.y(0.0, &vec![0.0; p.problem.state_dim()]));
    if let Some(o) = oracle_y0 {
        let tol = (0.02 * o.abs()).max(3.0 * sol.y0_stderr);
        checks.push(Check::at_most(
            "y0-vs-closed-form",
            (sol.y0 - o).abs(),
            tol,
            "closed form",
        ));
    }
    let keep = match cfg.output.field_paths {
        0 => sol.n_paths(),
        k => k.min(sol.n_paths()),
    };
    let grid = sol.grid.clone();
    dir.csv(
        "y.csv",
        &["path", "step", "t", "y"],
        (0..keep).flat_map(|p| {
            let (y, g) = (&sol.y, &grid);
            (0..=g.n_steps()).map(move |i| vec![p.to_string(), i.to_string(), fmt(g.t(i)), fmt(y.get(p, i, 0))])
        }),
    )?;
    dir.csv(
        "z.csv",
        &["path", "step", "t", "component", "z"],
        (0..keep).flat_map(|p| {
            let (z, g) = (&sol.z, &grid);
            (0..g.n_steps()).flat_map(move |i| {
                (0..z.width()).map(move |k| {
                    vec![
                        p.to_string(),
                        i.to_string(),
                        fmt(g.t(i)),
                        k.to_string(),
                        fmt(z.get(p, i, k)),
                    ]
                })
            })
        }),
    )?;
    let summary = format!(
        "{}: Y0 = {:.6} +- {:.6} ({:?})",
        p.label, sol.y0, sol.y0_stderr, sol.mode
    );
    Ok(Outcome {
        checks,
        results: json!({
            "problem": p.label,
            "mode": resolve_mode(&p.problem, s.mode),
            "y0": sol.y0,
            "y0_stderr": sol.y0_stderr,
            "closed_form_y0": oracle_y0,
            "diagnostics": sol.diagnostics,
        }),
        summary,
    })
}

fn solve_pde(cfg: &RunConfig, dir: &mut RunDir) -> Result<Outcome> {
    let def = cfg.pde.clone().unwrap_or_default();
    let p = problem(cfg, Command::SolvePde, def.horizon)?;
    if p.problem.dim != 1 {
        return Err(Error::Config("solve-pde needs a one-dimensional problem".into()));
    }
    let grid = def.grid(p.oracle.as_ref())?;
    let sol = solve_semilinear(
        &p.problem.generator,
        &p.problem.terminal,
        &SdeCoefficients::brownian(def.sigma),
        &grid,
        def.floor,
    )?;
    let positive = sol.u.iter().all(|&u| u > 0.0 && u.is_finite());
    let mut oracle_error = None;
    // the catalog closed forms are for unit volatility
    if let (Some(o), true) = (&p.oracle, def.sigma == 1.0) {
        let g = &sol.grid;
        let mut e = 0.0f64;
        for k in 0..=g.n_t {
            for j in 1..g.n_x {
                let v = o.y(g.t(k), &[g.x(j)]);
                e = e.max((sol.at(k, j) - v).abs() / v.abs());
            }
        }
        oracle_error = Some(e);
    }
    let u00 = if grid.x_min <= 0.0 && grid.x_max >= 0.0 {
        Some(sol.value_at(0, 0.0)?)
    } else {
        None
    };
    let mut bytes = Vec::new();
    sol.write_csv(&mut bytes)?;
    dir.write("u.csv", &bytes)?;
    Ok(Outcome {
        checks: vec![Check::holds("positive", positive, "u > 0")],
        results: json!({
            "problem": p.label,
            "grid": { "x_min": grid.x_min, "x_max": grid.x_max, "n_x": grid.n_x, "n_t": grid.n_t,
                      "horizon": grid.horizon, "boundary": grid.boundary.name() },
            "u_0_0": u00,
            "growth_c": sol.growth_params.0,
            "growth_q": sol.growth_params.1,
            "closed_form_max_rel_error": oracle_error,
        }),
        summary: format!("{}: u(0,0) = {:?}, closed-form error {:?}", p.label, u00, oracle_error),
    })
}

fn cross_validate(cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    let def = cfg.pde.clone().unwrap_or_default();
    let s =
        solver_or(cfg, seed, 64, 100_000, RegressionBasis::local(40, 2), SolveMode::Direct).with_horizon(def.horizon);
    let p = problem(cfg, Command::CrossValidate, s.horizon)?;
    let x0 = cfg.cross_validate.as_ref().map_or(0.0, |c| c.x0);
    let grid = def.grid(p.oracle.as_ref())?;
    let r = fk_cross_validate(&p.problem, &SdeCoefficients::brownian(def.sigma), &grid, &s, x0)?;
    dir.csv(
        "feynman_kac.csv",
        &["x0", "u_pde", "y0_mc", "mc_stderr", "discrepancy", "tolerance"],
        [vec![
            fmt(r.x0),
            fmt(r.u_pde),
            fmt(r.y0_mc),
            fmt(r.mc_stderr),
            fmt(r.discrepancy),
            fmt(r.tolerance),
        ]],
    )?;
    Ok(Outcome {
        checks: vec![Check::at_most(
            "feynman-kac",
            r.discrepancy,
            r.tolerance,
            "PDE value u(0, x0)",
        )],
        summary: format!(
            "{}: u_pde {:.6} vs Y0 {:.6} +- {:.6}",
            p.label, r.u_pde, r.y0_mc, r.mc_stderr
        ),
        results: json!({ "problem": p.label, "feynman_kac": r }),
    })
}

fn suite(cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    let mut sc = cfg.suite.clone().unwrap_or_default();
    sc.seed = seed;
    let run = run_suite(&sc)?;
    dir.write("summary.txt", run.report.summary().as_bytes())?;
    dir.csv(
        "checks.csv",
        &["name", "value", "relation", "tolerance", "pass", "oracle"],
        run.report.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                fmt(c.value),
                c.relation.to_string(),
                fmt(c.tolerance),
                c.pass.to_string(),
                c.oracle.clone(),
            ]
        }),
    )?;
    dir.write(
        "suite_timings.json",
        serde_json::to_string_pretty(&run.timings)?.as_bytes(),
    )?;
    Ok(Outcome {
        summary: run.report.summary(),
        checks: run.report.checks.clone(),
        results: json!({ "n_checks": run.report.n_checks, "n_failed": run.report.n_failed, "suite": sc }),
    })
}

fn sdu(cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    let def = cfg.sdu.clone().unwrap_or_default();
    let s = solver_or(cfg, seed, 32, 50_000, RegressionBasis::local(20, 2), SolveMode::Direct);
    let terminal = RobustSduSpec::capped_exponential_terminal(def.sigma, def.cap, def.margin);
    let floor = -def.cap - def.margin;
    let spec = if def.rho == 0.0 {
        RobustSduSpec::without_aggregator(PsiProfile::Linear { slope: 1.0 }, terminal, def.margin, floor)?
    } else {
        epstein_zin_generator(def.rho, def.gamma, def.eta, TimeFn::Constant(def.consumption))?
            .spec(terminal, def.margin, floor, s.horizon)?
    };
    let paths = ensemble(&s, 1)?;
    spec.check(&paths, 10_000, seed)?;
    let r = robustness_battery(&spec, &paths, &s, def.draws, def.bound)?;
    let mut checks: Vec<Check> = r
        .rows
        .iter()
        .map(|row| {
            Check::at_least(
                format!("infimum/{}", row.label),
                row.slack,
                0.0,
                "V0 of the unpenalized problem",
            )
        })
        .collect();
    checks.push(Check::at_most(
        "closure",
        r.closure_discrepancy,
        r.closure_tolerance,
        "V0 of the unpenalized problem",
    ));
    dir.csv(
        "distortions.csv",
        &["label", "v0_x", "v0_x_stderr", "slack", "pass"],
        r.rows.iter().map(|row| {
            vec![
                row.label.clone(),
                fmt(row.v0_x),
                fmt(row.v0_x_stderr),
                fmt(row.slack),
                row.pass.to_string(),
            ]
        }),
    )?;
    Ok(Outcome {
        checks,
        summary: format!(
            "{}: V0 = {:.6} +- {:.6}, V0 under x-hat = {:.6}",
            spec.label, r.v0, r.v0_stderr, r.v0_hat
        ),
        results: json!({ "scenario": spec.label, "robustness": r }),
    })
}

fn cert_equiv(cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    let def = cfg.cert_equiv.clone().unwrap_or_default();
    let s = solver_or(cfg, seed, 32, 50_000, RegressionBasis::local(20, 2), SolveMode::Direct);
    let paths = ensemble(&s, 1)?;
    let xi = clipped_lognormal_loss(def.sigma, def.k);
    let ce = certainty_equivalent(&xi, TimeFn::Constant(def.gamma), &paths, &s)?;
    let r = &ce.report;
    let mut checks = vec![
        Check::at_most("routes-agree", r.discrepancy, r.tolerance, "route B"),
        Check::holds("risk-averse", r.risk_averse, "sample mean of the terminal"),
        Check::holds("negative", r.negative, "sign"),
    ];
    let mut quad = None;
    if def.gamma == 0.0 {
        let (sigma, k) = (def.sigma, def.k);
        let q = certainty_equivalent_quadrature(move |w| -(sigma * w).exp().clamp(1.0 / k, k), s.horizon)?;
        checks.push(Check::at_most(
            "route-a-vs-quadrature",
            (r.route_a - q).abs() / q.abs(),
            0.02,
            "adaptive quadrature",
        ));
        quad = Some(q);
    }
    let grid = ce.route_b.grid.clone();
    dir.csv(
        "certainty_equivalent.csv",
        &["step", "t", "route_a_mean", "route_b_mean"],
        (0..=grid.n_steps()).map(|i| {
            vec![
                i.to_string(),
                fmt(grid.t(i)),
                fmt(ce.route_a.mean_at(i, 0)),
                fmt(ce.route_b.y.mean_at(i, 0)),
            ]
        }),
    )?;
    Ok(Outcome {
        checks,
        summary: format!(
            "C0: route A {:.6}, route B {:.6}, quadrature {:?}",
            r.route_a, r.route_b, quad
        ),
        results: json!({ "terminal": xi.label(), "gamma": def.gamma, "report": r, "quadrature": quad }),
    })
}

fn gen_paths(cfg: &RunConfig, seed: u64, dir: &mut RunDir) -> Result<Outcome> {
    let s = solver_or(cfg, seed, 64, 1_000, RegressionBasis::polynomial(4), SolveMode::Auto);
    let dim = cfg.gen_paths.as_ref().map_or(1, |g| g.dim);
    let paths = ensemble(&s, dim)?;
    let mut bytes = Vec::new();
    paths.write_csv(&mut bytes)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    dir.write("paths.csv", &bytes)?;
    Ok(Outcome {
        checks: Vec::new(),
        summary: format!("{} paths x {} steps x {dim}, sha256 {digest}", s.n_paths, s.n_steps),
        results: json!({ "n_paths": s.n_paths, "n_steps": s.n_steps, "dim": dim, "horizon": s.horizon,
                         "paths_csv_sha256": digest }),
    })
}
