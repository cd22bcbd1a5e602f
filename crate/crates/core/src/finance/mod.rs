//! Robust recursive utility under drift distortions, and certainty
//! equivalents from g-expectations.

mod cert_equiv;
mod sdu;

pub use cert_equiv::{
    certainty_equivalent, certainty_equivalent_quadrature, clipped_lognormal_loss, utility, utility_derivative,
    utility_inverse, utility_second_derivative, CertaintyEquivalent, CertaintyEquivalentReport,
};
pub use sdu::{
    distortion_at, epstein_zin_generator, evaluate_penalized, optimal_distortion, robustness_battery, solve_sdu,
    Aggregator, DistortionProcess, DistortionRow, EpsteinZin, OptimalDistortion, PenalizedSolution, RobustSduSpec,
    RobustnessReport, SduEnvelope, SduSolution,
};

#[cfg(test)]
mod tests;
