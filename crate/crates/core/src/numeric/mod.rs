//! Linear algebra, least squares, quantiles and random streams shared by
//! every estimator.

pub mod matrix;
pub mod ols;
pub mod rng;
pub mod stats;

pub use matrix::Matrix;
pub use ols::{ols, ols_multi, MultiOlsFit, OlsFit, Qr};
pub use rng::{derive_stream, RngStream};
pub use stats::quantile;
