//! Support recovery in sparse chi-square and Gaussian models.
//!
//! The crate covers chi-square distributions (central and noncentral), the
//! usual family of thresholding procedures with their oracles, Monte Carlo
//! risk estimation, the phase-transition boundaries in the `(β, r)` plane,
//! and power and design calculations for 2×2 association screening.

pub mod boundaries;
pub mod distributions;
pub mod error;
pub mod gwas;
pub mod numfmt;
pub mod procedures;
pub mod risk;
pub mod rng;
pub mod simharness;

pub use error::{Error, Result};
