use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use singular_bsde::cli::{run_from, EXIT_FAILED, EXIT_OK, EXIT_SCHEMA};

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> singular_bsde::cli::RunOutput {
    run_from(std::iter::once("sbsde").chain(args.iter().copied()))
}

fn digest(p: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(p).unwrap()))
}

#[test]
fn single_path_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "[problem]\nid = \"martingale:sigma=1\"\n\n[solver]\nn_steps = 8\nn_paths = 1\n",
    );
    let out = tmp.path().join("runs");
    let r = run(&[
        "solve-bsde",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status, EXIT_SCHEMA);
    assert!(!out.exists(), "no output may be written for an invalid config");
}

#[test]
fn unknown_keys_and_commands_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "seed = 3\n[gen_paths]\ndim = 1\nwidth = 4\n");
    assert_eq!(
        run(&["gen-paths", "--config", cfg.to_str().unwrap()]).status,
        EXIT_SCHEMA
    );
    assert_eq!(run(&["solve-everything"]).status, EXIT_SCHEMA);
}

#[test]
fn gen_paths_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "[solver]\nn_steps = 8\nn_paths = 50\n");
    let args = |out: &Path| {
        run(&[
            "gen-paths",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let (a, b) = (args(&tmp.path().join("a")), args(&tmp.path().join("b")));
    assert_eq!(a.status, EXIT_OK);
    assert_eq!(b.status, EXIT_OK);
    let (da, db) = (a.dir.unwrap(), b.dir.unwrap());
    assert_eq!(da.file_name(), db.file_name());
    assert_eq!(digest(&da.join("paths.csv")), digest(&db.join("paths.csv")));
    assert_eq!(digest(&da.join("report.json")), digest(&db.join("report.json")));
    let header = std::fs::read_to_string(da.join("paths.csv")).unwrap();
    assert!(header.lines().count() > 50);
}

#[test]
fn seed_changes_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("runs");
    let go = |seed: &str| run(&["solve-pde", "--seed", seed, "--out", out.to_str().unwrap()]);
    let cfg_free = go("1");
    assert_eq!(cfg_free.status, EXIT_SCHEMA, "solve-pde needs a problem");

    let cfg = config(
        tmp.path(),
        "[problem]\nid = \"delta-power:delta=1,sigma=1\"\n\n[pde]\nn_x = 80\nn_t = 80\n",
    );
    let go = |seed: &str| {
        run(&[
            "solve-pde",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let (a, b) = (go("1"), go("2"));
    assert_eq!(a.status, EXIT_OK);
    assert_ne!(a.dir, b.dir);
    let report = a.report.unwrap();
    assert!(report.checks.iter().all(|c| !c.oracle.is_empty()));
    assert!(report.artifacts.iter().any(|f| f == "u.csv"));
}

#[test]
fn solve_bsde_writes_fields_and_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        "seed = 5\n\n[problem]\nid = \"delta-power:delta=1,sigma=1\"\n\n[solver]\nn_steps = 16\nn_paths = 20000\n\n[output]\nfield_paths = 10\n",
    );
    let r = run(&[
        "solve-bsde",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert!(r.status == EXIT_OK || r.status == EXIT_FAILED);
    let dir = r.dir.unwrap();
    let y = std::fs::read_to_string(dir.join("y.csv")).unwrap();
    assert_eq!(y.lines().next(), Some("path,step,t,y"));
    assert_eq!(y.lines().count(), 1 + 10 * 17);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert!(dir.join("timings.json").exists());
}
