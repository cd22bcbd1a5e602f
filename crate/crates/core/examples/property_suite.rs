//! Runs every battery and prints the gated checks.
//!
//! `cargo run --release --example property_suite -- [path_scale] [battery...]`
//! (`path_scale` 1.0 is the full desk scale; expect several minutes.)

use singular_bsde::verify::{run_suite, Battery, SuiteConfig};

fn main() -> singular_bsde::Result<()> {
    let mut args = std::env::args().skip(1);
    let path_scale: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let named: Vec<String> = args.collect();
    let batteries = if named.is_empty() {
        Battery::ALL.to_vec()
    } else {
        Battery::ALL
            .into_iter()
            .filter(|b| named.iter().any(|n| n == b.name()))
            .collect()
    };
    let run = run_suite(&SuiteConfig {
        batteries,
        path_scale,
        ..SuiteConfig::default()
    })?;
    print!("{}", run.report.summary());
    for t in &run.timings {
        println!("{:<12} {:.1}s", t.battery, t.seconds);
    }
    Ok(())
}
