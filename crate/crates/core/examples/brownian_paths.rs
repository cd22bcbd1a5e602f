//! Samples a Brownian ensemble, checks its first two moments at `T` and
//! writes it as CSV (`path,step,t,w`).
//!
//! `cargo run --release --example brownian_paths -- [n_paths] [out.csv]`

use std::fs::File;
use std::io::BufWriter;

use singular_bsde::stochastic::{PathEnsemble, TimeGrid};

fn main() -> singular_bsde::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_paths: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let out = args.next();

    let paths = PathEnsemble::sample(&TimeGrid::new(1.0, 32)?, 1, n_paths, 42)?;
    let last = paths.positions().at(paths.n_steps());
    let mean = last.iter().sum::<f64>() / n_paths as f64;
    let var = last.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64;
    println!("{n_paths} paths, 32 steps: mean W_T = {mean:+.4}, var W_T = {var:.4} (expect 0, 1)");

    // the same seed gives the same first path regardless of ensemble size
    let small = PathEnsemble::sample(&TimeGrid::new(1.0, 32)?, 1, 2, 42)?;
    println!(
        "path 0 reproducible across sizes: {}",
        small.w(0, 32, 0) == paths.w(0, 32, 0)
    );

    if let Some(path) = out {
        paths.write_csv(BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
