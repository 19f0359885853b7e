//! Lag-augmented local projection inference for impulse responses.
//!
//! The crate covers VAR simulation, local projection and autoregressive
//! impulse response estimators, the wild recursive bootstrap, closed-form
//! asymptotic variances and a reproducible Monte Carlo runner.

pub mod ar;
pub mod asymptotics;
pub mod bootstrap;
pub mod error;
pub mod lp;
pub mod montecarlo;
pub mod numeric;
pub mod report;
pub mod var;

pub use ar::{ar_estimate, ArSpec};
pub use bootstrap::{arla_efron, lp_pairs_bootstrap, lp_percentile_t, BootstrapSpec};
pub use error::{Error, Result};
pub use lp::{lp_estimate, LpSpec, SeKind};
pub use numeric::Matrix;
pub use report::{EstimateReport, Method};
pub use var::{VarCoefficients, VarDgp};
