//! Tail-risk estimation for environmental extremes.
//!
//! Univariate peaks-over-threshold inference with generalised Pareto
//! margins, and multivariate joint-exceedance probabilities under max-linear
//! models estimated from data.

pub mod cli;
pub mod clustering;
pub mod error;
pub mod gpd_inference;
pub mod margins;
pub mod maxlinear;
pub mod oracle;
pub mod rng;
pub mod tpdm;

pub use error::{Error, Result};
