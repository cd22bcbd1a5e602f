//! The full property suite: every battery, one flat list of gated checks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    comparison_battery, stability_battery, standard_pairs, transform_suite, PerturbationSequence, FD_TOL, ROUNDTRIP_TOL,
};
use crate::error::{Error, Result};
use crate::finance::{
    certainty_equivalent, certainty_equivalent_quadrature, clipped_lognormal_loss, epstein_zin_generator,
    robustness_battery, RobustSduSpec,
};
use crate::pde::{
    fk_cross_validate, growth_check, probe_grids, solve_semilinear, uniqueness_probe, Boundary, PdeGrid, PdeSolution,
    SdeCoefficients,
};
use crate::problems::{
    catalog, oracle_delta, oracle_power, BsdeProblem, Envelope, GeneratorSpec, OracleSolution, StateLaw, TerminalSpec,
    TimeFn,
};
use crate::solver::{estimate_bmo_proxy, moment_estimate_check, solve, SolveMode, SolverConfig};
use crate::stochastic::{PathEnsemble, RegressionBasis, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Battery {
    Transforms,
    Oracle,
    Comparison,
    Stability,
    Moment,
    Bmo,
    Pde,
    FeynmanKac,
    Uniqueness,
    Sdu,
    CertEquiv,
}

impl Battery {
    pub const ALL: [Battery; 11] = [
        Battery::Transforms,
        Battery::Oracle,
        Battery::Comparison,
        Battery::Stability,
        Battery::Moment,
        Battery::Bmo,
        Battery::Pde,
        Battery::FeynmanKac,
        Battery::Uniqueness,
        Battery::Sdu,
        Battery::CertEquiv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Battery::Transforms => "transforms",
            Battery::Oracle => "oracle",
            Battery::Comparison => "comparison",
            Battery::Stability => "stability",
            Battery::Moment => "moment",
            Battery::Bmo => "bmo",
            Battery::Pde => "pde",
            Battery::FeynmanKac => "feynman-kac",
            Battery::Uniqueness => "uniqueness",
            Battery::Sdu => "sdu",
            Battery::CertEquiv => "cert-equiv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub batteries: Vec<Battery>,
    /// Multiplies every battery's path count; `1.0` is full scale.
    pub path_scale: f64,
    pub transform_points: usize,
    /// `n_x = n_t` for the closed-form PDE solves.
    pub pde_nodes: usize,
    pub distortion_draws: usize,
    pub distortion_bound: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            batteries: Battery::ALL.to_vec(),
            path_scale: 1.0,
            transform_points: 10_000,
            pde_nodes: 400,
            distortion_draws: 20,
            distortion_bound: 2.0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_scale > 0.0) || !self.path_scale.is_finite() {
            return Err(Error::Config(format!(
                "path_scale must be positive, got {}",
                self.path_scale
            )));
        }
        if self.transform_points == 0 {
            return Err(Error::Config("transform_points must be positive".into()));
        }
        if self.pde_nodes < 16 || !self.pde_nodes.is_multiple_of(8) {
            return Err(Error::Config(format!(
                "pde_nodes must be a multiple of 8 and >= 16, got {}",
                self.pde_nodes
            )));
        }
        if self.distortion_draws == 0 || !(self.distortion_bound > 0.0) {
            return Err(Error::Config(
                "distortion_draws and distortion_bound must be positive".into(),
            ));
        }
        Ok(())
    }

    fn paths(&self, full: usize) -> usize {
        ((full as f64 * self.path_scale).round() as usize).max(2)
    }
}

/// One gated numeric check. `relation` says how `value` compares with
/// `tolerance` (`"<="` or `">="`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: &'static str,
    pub pass: bool,
    /// Where the reference value comes from.
    pub oracle: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64, oracle: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            relation: "<=",
            pass: value <= tolerance,
            oracle: oracle.into(),
            detail: None,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64, oracle: impl Into<String>) -> Self {
        Self {
            relation: ">=",
            pass: value >= tolerance,
            ..Self::at_most(name, value, tolerance, oracle)
        }
    }

    pub fn holds(name: impl Into<String>, cond: bool, oracle: impl Into<String>) -> Self {
        Self::at_least(name, if cond { 1.0 } else { 0.0 }, 1.0, oracle)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Also fails when `ok` is false, whatever the value.
    fn and(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

/// Report without wall-clock data, so reruns compare bytewise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
    pub n_checks: usize,
    pub n_failed: usize,
    pub pass: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s += &format!(
                "{} {:<56} {:>12.5e} {} {:<10.3e} [{}]",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.relation,
                c.tolerance,
                c.oracle
            );
            if let Some(d) = &c.detail {
                s += &format!(" {d}");
            }
            s.push('\n');
        }
        s += &format!("{} of {} checks passed\n", self.n_checks - self.n_failed, self.n_checks);
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryTiming {
    pub battery: &'static str,
    pub seconds: f64,
}

pub struct SuiteRun {
    pub report: SuiteReport,
    pub timings: Vec<BatteryTiming>,
}

/// Runs the configured batteries in order. A battery that errors out
/// contributes one failing `<battery>/error` check.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteRun> {
    config.validate()?;
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    for &b in &config.batteries {
        let start = Instant::now();
        match run_battery(b, config) {
            Ok(c) => checks.extend(c),
            Err(e) => {
                checks.push(Check::holds(format!("{}/error", b.name()), false, "none").with_detail(e.to_string()))
            }
        }
        timings.push(BatteryTiming {
            battery: b.name(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let n_failed = checks.iter().filter(|c| !c.pass).count();
    Ok(SuiteRun {
        report: SuiteReport {
            config: config.clone(),
            n_checks: checks.len(),
            n_failed,
            pass: n_failed == 0,
            checks,
        },
        timings,
    })
}

pub fn run_battery(b: Battery, c: &SuiteConfig) -> Result<Vec<Check>> {
    match b {
        Battery::Transforms => transforms(c),
        Battery::Oracle => oracle(c),
        Battery::Comparison => comparison(c),
        Battery::Stability => stability(c),
        Battery::Moment => moment(c),
        Battery::Bmo => bmo(c),
        Battery::Pde => pde(c),
        Battery::FeynmanKac => feynman_kac(c),
        Battery::Uniqueness => uniqueness(c),
        Battery::Sdu => sdu(c),
        Battery::CertEquiv => cert_equiv(c),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn lognormal() -> TerminalSpec {
    TerminalSpec::lognormal(1.0, 0.0)
}

fn ensemble(n_steps: usize, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    PathEnsemble::sample(&TimeGrid::new(1.0, n_steps)?, 1, n_paths, seed)
}

fn local_direct(n_steps: usize, n_paths: usize, n_bins: usize, seed: u64) -> SolverConfig {
    SolverConfig::new(n_steps, n_paths)
        .with_basis(RegressionBasis::local(n_bins, 2))
        .with_mode(SolveMode::Direct)
        .with_seed(seed)
}

fn transforms(c: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for t in transform_suite(c.transform_points, c.seed)? {
        let clean = t.errors == 0;
        out.push(
            Check::at_most(
                format!("transforms/{}/roundtrip", t.name),
                t.roundtrip_max,
                ROUNDTRIP_TOL,
                "inverse of forward map",
            )
            .and(clean)
            .with_detail(format!("{} of {} points over", t.roundtrip_failures, t.n_roundtrip)),
        );
        out.push(
            Check::at_most(
                format!("transforms/{}/derivatives", t.name),
                t.fd_max,
                FD_TOL,
                "fourth-order central difference",
            )
            .and(clean)
            .with_detail(format!("{} of {} points over", t.fd_failures, t.n)),
        );
    }
    Ok(out)
}

fn oracle(c: &SuiteConfig) -> Result<Vec<Check>> {
    let n = 64;
    let np = c.paths(200_000);
    let paths = ensemble(n, np, c.seed)?;
    let base = SolverConfig::new(n, np)
        .with_basis(RegressionBasis::polynomial(10))
        .with_seed(c.seed);
    let law = StateLaw::brownian(1.0);
    let mut out = Vec::new();
    for d in [0.5, 1.0, 2.0] {
        let (problem, exact) = oracle_delta(d, &lognormal(), law)?;
        let y0 = exact.y(0.0, &[0.0]);
        let tr = solve(&problem, &paths, &base.clone().with_mode(SolveMode::Transform))?;
        let di = solve(&problem, &paths, &base.clone().with_mode(SolveMode::Direct))?;
        out.push(Check::at_most(
            format!("oracle/delta={d}/transform"),
            rel(tr.y0, y0),
            0.02,
            "lognormal moments",
        ));
        out.push(Check::at_most(
            format!("oracle/delta={d}/direct-vs-transform"),
            rel(di.y0, tr.y0),
            0.02,
            "transform mode",
        ));
    }
    for p in [2.0, 3.0] {
        let (problem, exact) = oracle_power(p, &lognormal(), law)?;
        // the direct step loses its positive root once Z is noisy; the
        // negative-exponent power transform removes the singular term exactly
        let sol = solve(&problem, &paths, &base.clone().with_mode(SolveMode::Transform))?;
        out.push(Check::at_most(
            format!("oracle/power-p={p}"),
            rel(sol.y0, exact.y(0.0, &[0.0])),
            0.02,
            "lognormal mean",
        ));
    }
    Ok(out)
}

fn comparison(c: &SuiteConfig) -> Result<Vec<Check>> {
    let n = 64;
    let np = c.paths(200_000);
    let paths = ensemble(n, np, c.seed)?;
    let report = comparison_battery(&standard_pairs()?, &paths, &local_direct(n, np, 40, c.seed), 8)?;
    let mut out = Vec::new();
    for p in &report.pairs {
        let name = format!("comparison/{}", p.label);
        match &p.skipped {
            Some(why) => out.push(Check::holds(name, false, "certificate").with_detail(why.clone())),
            None => {
                let worst = p.worst_ratio.iter().cloned().fold(0.0, f64::max);
                out.push(Check::at_most(name, worst, 1.0, "three combined fold stderrs"));
            }
        }
    }
    // (E ξ²)^{1/2} − E ξ for ξ = e^{W_1}
    let jensen = 1f64.exp() - 0.5f64.exp();
    let gap = report.pairs[0].gap0();
    out.push(Check::at_most(
        "comparison/jensen-gap",
        rel(gap, jensen),
        0.02,
        "lognormal moments",
    ));
    Ok(out)
}

fn stability(c: &SuiteConfig) -> Result<Vec<Check>> {
    let n = 32;
    let np = c.paths(50_000);
    let paths = ensemble(n, np, c.seed)?;
    let cfg = local_direct(n, np, 20, c.seed);
    let mut out = Vec::new();
    for id in [
        "martingale:sigma=1",
        "delta-power:delta=0.5,sigma=1",
        "delta-power:delta=2,sigma=1",
    ] {
        let seq = PerturbationSequence::scaled_terminals(&catalog(id, 1.0)?.problem, &[2, 4, 8, 16, 32]);
        let r = stability_battery(&seq, &paths, &cfg)?;
        out.push(Check::holds(
            format!("stability/{id}/monotone"),
            r.monotone,
            "1.2x noise band",
        ));
        out.push(Check::at_most(
            format!("stability/{id}/contraction"),
            r.contraction,
            0.1,
            "e_32 / e_2",
        ));
        if let Some(z) = r.z_monotone {
            out.push(Check::holds(format!("stability/{id}/z-monotone"), z, "1.2x noise band"));
        }
    }
    Ok(out)
}

const MOMENT_BATTERY: [&str; 6] = [
    "martingale:sigma=1",
    "delta-power:delta=0.5,sigma=1",
    "delta-power:delta=2,sigma=1",
    "power:p=2,sigma=1",
    "power:p=3,sigma=1",
    "linear:a=0.5,b=0.5,sigma=1",
];

fn moment(c: &SuiteConfig) -> Result<Vec<Check>> {
    let (n, p, seeds) = (32, 1.5, 5u64);
    let np = c.paths(20_000);
    let cfg = local_direct(n, np, 20, c.seed);
    let problems: Vec<BsdeProblem> = MOMENT_BATTERY
        .iter()
        .map(|id| catalog(id, 1.0).map(|e| e.problem))
        .collect::<Result<_>>()?;
    // ratios[problem][seed]
    let mut ratios = vec![Vec::new(); problems.len()];
    for s in 0..seeds {
        let paths = ensemble(n, np, c.seed.wrapping_add(s))?;
        for (k, problem) in problems.iter().enumerate() {
            let sol = solve(problem, &paths, &cfg)?;
            let env = problem
                .generator
                .power_envelope()
                .cloned()
                .unwrap_or(Envelope::singular(0.0));
            let xi: Vec<f64> = paths
                .positions()
                .at(n)
                .iter()
                .map(|&w| problem.terminal.eval(&[w]))
                .collect();
            ratios[k].push(moment_estimate_check(&sol, p, &env, &xi)?.ratio);
        }
    }
    let mut all: Vec<f64> = ratios.iter().flatten().cloned().collect();
    all.sort_by(f64::total_cmp);
    let median = all[all.len() / 2];
    let mut out = Vec::new();
    for (id, r) in MOMENT_BATTERY.iter().zip(&ratios) {
        let finite = r.iter().all(|v| v.is_finite() && *v > 0.0);
        let m = r.iter().sum::<f64>() / r.len() as f64;
        let sd = (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::holds(format!("moment/{id}/finite"), finite, "lhs / rhs"));
        out.push(Check::at_most(
            format!("moment/{id}/seed-cv"),
            sd / m,
            0.5,
            "five seeds",
        ));
        out.push(Check::at_most(
            format!("moment/{id}/over-median"),
            max / median,
            10.0,
            "battery median",
        ));
    }
    Ok(out)
}

fn clipped_terminal() -> TerminalSpec {
    TerminalSpec::custom(
        "clamp(e^W, 1/3, 3)",
        |x| x[0].exp().clamp(1.0 / 3.0, 3.0),
        Some(1.0 / 3.0),
    )
}

fn bmo(c: &SuiteConfig) -> Result<Vec<Check>> {
    let np = c.paths(50_000);
    let gens = [
        ("zero", GeneratorSpec::zero()),
        ("singular(0.5)", GeneratorSpec::singular(0.5)),
        ("singular(1)", GeneratorSpec::singular(1.0)),
    ];
    let mut proxies = vec![[0.0; 2]; gens.len()];
    for (j, n) in [64, 128].into_iter().enumerate() {
        let paths = ensemble(n, np, c.seed)?;
        let cfg = local_direct(n, np, 20, c.seed);
        for (k, (_, g)) in gens.iter().enumerate() {
            let sol = solve(&BsdeProblem::new(g.clone(), clipped_terminal(), 1)?, &paths, &cfg)?;
            proxies[k][j] = estimate_bmo_proxy(&sol, &cfg.basis)?;
        }
    }
    Ok(gens
        .iter()
        .zip(&proxies)
        .map(|((label, _), p)| {
            Check::at_most(
                format!("bmo/{label}/doubling-change"),
                rel(p[1], p[0]),
                0.2,
                "n_steps 64 vs 128",
            )
            .with_detail(format!("proxy {:.5} -> {:.5}", p[0], p[1]))
        })
        .collect())
}

fn max_rel_error(sol: &PdeSolution, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = &sol.grid;
    let mut e = 0.0f64;
    for k in 0..=g.n_t {
        for j in 1..g.n_x {
            let v = exact(g.t(k), g.x(j));
            e = e.max((sol.at(k, j) - v).abs() / v);
        }
    }
    e
}

fn pde(c: &SuiteConfig) -> Result<Vec<Check>> {
    let coeffs = SdeCoefficients::brownian(1.0);
    let heat: OracleSolution = crate::problems::oracle_martingale(&lognormal(), StateLaw::brownian(1.0))?;
    let (singular, delta_one) = oracle_delta(1.0, &lognormal(), StateLaw::brownian(1.0))?;
    let cases = [
        ("heat", GeneratorSpec::zero(), heat),
        ("singular(1)", singular.generator, delta_one),
    ];
    let mut out = Vec::new();
    for (label, f, exact) in &cases {
        let solve_at = |nodes: usize| {
            let grid = PdeGrid::new(-6.0, 6.0, nodes, nodes, 1.0, Boundary::LogLinear)?;
            solve_semilinear(f, &lognormal(), &coeffs, &grid, 1e-6)
        };
        let sol = solve_at(c.pde_nodes)?;
        let e = max_rel_error(&sol, |t, x| exact.y(t, &[x]));
        out.push(Check::at_most(
            format!("pde/{label}/max-rel-error"),
            e,
            1e-3,
            "closed form",
        ));
        out.push(Check::holds(
            format!("pde/{label}/positive"),
            sol.u.iter().all(|&u| u > 0.0),
            "u > 0",
        ));
        out.push(Check::holds(
            format!("pde/{label}/growth"),
            growth_check(&sol, 3.0, 1.0),
            "closed form below 3e^{|x|}",
        ));
        let errs: Vec<f64> = [8, 4, 2]
            .iter()
            .map(|&d| solve_at(c.pde_nodes / d).map(|s| max_rel_error(&s, |t, x| exact.y(t, &[x]))))
            .collect::<Result<_>>()?;
        let order = errs
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
        out.push(Check::at_least(
            format!("pde/{label}/refinement-order"),
            order,
            1.0,
            "closed form",
        ));
    }
    Ok(out)
}

fn feynman_kac(c: &SuiteConfig) -> Result<Vec<Check>> {
    let n = 64;
    let np = c.paths(100_000);
    let cfg = local_direct(n, np, 40, c.seed);
    let grid = PdeGrid::new(-6.0, 6.0, c.pde_nodes, c.pde_nodes, 1.0, Boundary::LogLinear)?;
    let mut out = Vec::new();
    for id in ["martingale:sigma=1", "delta-power:delta=1,sigma=1"] {
        let r = fk_cross_validate(
            &catalog(id, 1.0)?.problem,
            &SdeCoefficients::brownian(1.0),
            &grid,
            &cfg,
            0.0,
        )?;
        out.push(
            Check::at_most(
                format!("feynman-kac/{id}"),
                r.discrepancy,
                r.tolerance,
                "PDE value u(0,0)",
            )
            .with_detail(format!("u_pde {:.5} y0_mc {:.5}", r.u_pde, r.y0_mc)),
        );
    }
    Ok(out)
}

fn uniqueness(_c: &SuiteConfig) -> Result<Vec<Check>> {
    let (problem, exact) = oracle_delta(1.0, &lognormal(), StateLaw::brownian(1.0))?;
    let base = PdeGrid::new(-6.0, 6.0, 50, 50, 1.0, Boundary::LogLinear)?;
    let levels = 4;
    let grids = probe_grids(&base, Boundary::from_oracle(&exact), levels);
    let r = uniqueness_probe(
        &problem.generator,
        &lognormal(),
        &SdeCoefficients::brownian(1.0),
        &grids,
        1e-6,
    )?;
    // grids alternate Dirichlet / log-linear per level; the discrepancy at
    // level l is the largest gap among the four solutions of levels l, l+1
    let disc: Vec<f64> = (0..levels - 1)
        .map(|l| {
            let ids = [2 * l, 2 * l + 1, 2 * l + 2, 2 * l + 3];
            let mut m = 0.0f64;
            for a in 0..4 {
                for b in a + 1..4 {
                    m = m.max(r.discrepancy(ids[a], ids[b]).unwrap_or(f64::NAN));
                }
            }
            m
        })
        .collect();
    Ok(disc
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let ratio = w[1] / w[0];
            Check::at_most(
                format!("uniqueness/halving-{}", l + 1),
                (ratio - 0.5).abs(),
                0.15,
                "ratio 0.5 +- 30%",
            )
            .with_detail(format!("ratio {ratio:.4}, discrepancies {:.3e} -> {:.3e}", w[0], w[1]))
        })
        .collect())
}

fn sdu(c: &SuiteConfig) -> Result<Vec<Check>> {
    let n = 32;
    let np = c.paths(50_000);
    let paths = ensemble(n, np, c.seed)?;
    let cfg = local_direct(n, np, 20, c.seed);
    let ez = epstein_zin_generator(2.0, 1.5, 0.02, TimeFn::Constant(1.0))?;
    let spec: RobustSduSpec = ez.spec(
        RobustSduSpec::capped_exponential_terminal(1.0, 3.0, 0.5),
        0.5,
        -3.5,
        1.0,
    )?;
    spec.check(&paths, 10_000, c.seed)?;
    let r = robustness_battery(&spec, &paths, &cfg, c.distortion_draws, c.distortion_bound)?;
    let mut out: Vec<Check> = r
        .rows
        .iter()
        .map(|row| {
            Check::at_least(
                format!("sdu/infimum/{}", row.label),
                row.slack,
                0.0,
                "V0 of the unpenalized problem",
            )
        })
        .collect();
    out.push(
        Check::at_most(
            "sdu/closure",
            r.closure_discrepancy,
            r.closure_tolerance,
            "V0 of the unpenalized problem",
        )
        .with_detail(format!("v0 {:.5} v0_hat {:.5}", r.v0, r.v0_hat)),
    );
    Ok(out)
}

fn cert_equiv(c: &SuiteConfig) -> Result<Vec<Check>> {
    let n = 32;
    let np = c.paths(50_000);
    let k = 4.0;
    let paths = ensemble(n, np, c.seed)?;
    let ce = certainty_equivalent(
        &clipped_lognormal_loss(1.0, k),
        TimeFn::zero(),
        &paths,
        &local_direct(n, np, 20, c.seed),
    )?;
    let oracle = certainty_equivalent_quadrature(move |w| -w.exp().clamp(1.0 / k, k), 1.0)?;
    let r = &ce.report;
    Ok(vec![
        Check::at_most(
            "cert-equiv/route-a-vs-quadrature",
            rel(r.route_a, oracle),
            0.02,
            "adaptive quadrature",
        ),
        Check::at_most("cert-equiv/routes-agree", r.discrepancy, r.tolerance, "route B"),
        Check::at_least(
            "cert-equiv/risk-aversion",
            r.mean_terminal - 3.0 * r.route_a_stderr.hypot(r.mean_terminal_stderr) - r.route_a,
            0.0,
            "sample mean of the terminal",
        ),
        Check::holds("cert-equiv/negative", r.negative, "sign"),
    ])
}
