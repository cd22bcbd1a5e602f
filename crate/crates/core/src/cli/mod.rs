//! The `sbsde` command line. Exit status: 0 when every gated check passes,
//! 1 on a failed check or a numerical error, 2 on a bad command line or
//! config.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use commands::{config_hash, RunReport};
pub use config::{
    locate, BoundaryDef, CertEquivDef, CrossValidateDef, GenPathsDef, GeneratorDef, OutputDef, PdeDef, ProblemDef,
    RunConfig, SchemaError, SduDef, TerminalDef,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sbsde",
    version,
    about = "Singular quadratic BSDE solvers and property batteries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Root of the content-addressed output directories.
    #[arg(long, global = true, value_name = "DIR", default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Monte Carlo solve of one BSDE.
    SolveBsde,
    /// Finite-difference solve of the associated semilinear PDE.
    SolvePde,
    /// Monte Carlo against finite differences at one starting point.
    CrossValidate,
    /// Every property battery; one gated check per property.
    RunSuite,
    /// Robust stochastic differential utility and its distortion battery.
    Sdu,
    /// Certainty equivalent by the two routes.
    CertEquiv,
    /// Dumps a Brownian ensemble as CSV.
    GenPaths,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveBsde => "solve-bsde",
            Command::SolvePde => "solve-pde",
            Command::CrossValidate => "cross-validate",
            Command::RunSuite => "run-suite",
            Command::Sdu => "sdu",
            Command::CertEquiv => "cert-equiv",
            Command::GenPaths => "gen-paths",
        }
    }
}

/// What a finished run produced.
pub struct RunOutput {
    pub status: i32,
    pub dir: Option<PathBuf>,
    pub report: Option<RunReport>,
}

/// Parses `args` (program name first), runs the command and writes its
/// files. Diagnostics go to stderr.
pub fn run_from<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let fail = |status| RunOutput {
        status,
        dir: None,
        report: None,
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return fail(if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK });
        }
    };

    let (src, origin) = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(s) => (s, p.display().to_string()),
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", p.display());
                return fail(EXIT_SCHEMA);
            }
        },
        None => (String::new(), "<defaults>".to_string()),
    };
    let mut cfg = match RunConfig::parse(&src) {
        Ok(c) => c,
        Err(e) => {
            match e.line {
                Some(l) => eprintln!("error: {origin}:{l}: {}", e.message),
                None => eprintln!("error: {origin}: {}", e.message),
            }
            return fail(EXIT_SCHEMA);
        }
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(1);
    cfg.seed = Some(seed);
    if let Some(s) = cfg.solver.as_mut() {
        s.seed = seed;
    }

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return fail(EXIT_FAILED);
        }
    };
    let command = cli.command;
    let hash = config_hash(command, &cfg);
    let mut dir = match commands::RunDir::create(&cli.out, command, &hash) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: output directory: {e}");
            return fail(EXIT_FAILED);
        }
    };
    let start = Instant::now();
    let outcome = pool.install(|| commands::execute(command, &cfg, seed, &mut dir));
    let seconds = start.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", command.name());
            let status = if matches!(e, Error::Config(_)) {
                EXIT_SCHEMA
            } else {
                EXIT_FAILED
            };
            return RunOutput {
                status,
                dir: Some(dir.path),
                report: None,
            };
        }
    };

    let timings =
        serde_json::json!({ "command": command.name(), "seconds": seconds, "threads": pool.current_num_threads() });
    if let Err(e) = dir.write(
        "timings.json",
        serde_json::to_string_pretty(&timings).unwrap_or_default().as_bytes(),
    ) {
        eprintln!("error: writing timings: {e}");
        return fail(EXIT_FAILED);
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    let mut artifacts = dir.artifacts.clone();
    artifacts.push("report.json".into());
    artifacts.sort();
    let report = RunReport {
        command: command.name(),
        config_hash: hash,
        seed,
        inputs: serde_json::to_value(&cfg).unwrap_or_default(),
        checks: outcome.checks,
        results: outcome.results,
        artifacts,
        pass,
    };
    if let Err(e) = dir.write("report.json", report.to_json().as_bytes()) {
        eprintln!("error: writing report: {e}");
        return fail(EXIT_FAILED);
    }
    if cli.verbose {
        eprintln!("{}", outcome.summary.trim_end());
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    println!(
        "{} {}: {} of {} checks passed -> {}",
        if pass { "PASS" } else { "FAIL" },
        command.name(),
        report.checks.len() - failed,
        report.checks.len(),
        dir.path.display()
    );
    RunOutput {
        status: if pass { EXIT_OK } else { EXIT_FAILED },
        dir: Some(dir.path),
        report: Some(report),
    }
}
