//! Numerical batteries for comparison, stability and cross-method agreement.

mod battery;
mod comparison;
mod stability;
mod suite;
mod transform_suite;

pub use battery::standard_pairs;
pub use comparison::{comparison_battery, ComparisonReport, OrderedProblemPair, PairReport};
pub use stability::{sample_convexity, stability_battery, PerturbationSequence, StabilityReport};
pub use suite::{run_battery, run_suite, Battery, BatteryTiming, Check, SuiteConfig, SuiteReport, SuiteRun};
pub use transform_suite::{check_transform, transform_suite, TransformCheck, FD_TOL, ROUNDTRIP_TOL};

#[cfg(test)]
mod tests;
