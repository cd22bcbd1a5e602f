//! Problem definitions and the closed-form oracle catalog.

mod catalog;
mod generator;
mod oracle;
mod problem;
mod sde;
mod terminal;
mod time_fn;

pub use catalog::{catalog, CatalogEntry, KINDS};
pub use generator::{norm, norm_sq, Envelope, EnvelopeSpec, GeneralizedEnvelope, GeneratorFn, GeneratorSpec};
pub use oracle::{oracle_delta, oracle_linear, oracle_martingale, oracle_power, OracleSolution, StateLaw};
pub use problem::BsdeProblem;
pub use sde::{ForwardSde, SdeCoefficients};
pub use terminal::{TerminalFamily, TerminalSpec};
pub use time_fn::TimeFn;
