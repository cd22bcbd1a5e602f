//! Least-squares conditional expectations: `E[e^{W_1} | W_t]` against
//! `e^{W_t + (1−t)/2}` for the three basis families.

use singular_bsde::stochastic::{conditional_expectation, PathEnsemble, RegressionBasis, TimeGrid};

fn main() -> singular_bsde::Result<()> {
    let (n, np) = (10, 50_000);
    let paths = PathEnsemble::sample(&TimeGrid::new(1.0, n)?, 1, np, 3)?;
    let target: Vec<f64> = paths.positions().at(n).iter().map(|w| w.exp()).collect();
    for i in [2, 5, 8] {
        let t = i as f64 / n as f64;
        let state = paths.positions().at(i);
        for (label, basis) in [
            ("polynomial(4)", RegressionBasis::polynomial(4)),
            ("bins(30)", RegressionBasis::bins(30)),
            ("local(20, 2)", RegressionBasis::local(20, 2)),
        ] {
            let fit = conditional_expectation(&target, state, 1, &basis)?;
            let rmse = (fit
                .iter()
                .zip(state)
                .map(|(f, w)| (f - (w + 0.5 * (1.0 - t)).exp()).powi(2))
                .sum::<f64>()
                / np as f64)
                .sqrt();
            println!("t={t:.1} {label:<14} rmse {rmse:.4}");
        }
    }
    Ok(())
}
