//! Verification laboratory for boundary point principles of elliptic
//! partial differential inequalities.
//!
//! The crate provides:
//! - singular radial weights with certified evaluation and endpoint-graded
//!   quadrature ([`weight`]),
//! - the annulus comparison (barrier) function and its residual checks
//!   ([`barrier`]),
//! - linear elliptic coefficient families with growth certificates and the
//!   quasilinear-to-linear reduction ([`operator`]),
//! - singular-set geometry: outward ball searches, porosity checks and
//!   cone/ball chains ([`geometry`]),
//! - finite-difference demonstrations of strong maximum principles and
//!   Hopf boundary derivatives ([`fdlab`]),
//! - an executable catalog of counter-example case studies ([`cases`]).

pub mod barrier;
pub mod cases;
pub mod fdlab;
pub mod fields;
pub mod geometry;
pub mod operator;
pub mod quad;
pub mod weight;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature failed to converge after {levels} grading levels (last increment {last_increment:e}); integrand may be non-integrable")]
    Divergence { levels: usize, last_increment: f64 },
    #[error("invalid construction: {0}")]
    Construction(String),
    #[error("no admissible value found: {0}")]
    NotFound(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("verification mismatch: {0}")]
    Mismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Euclidean norm of a point.
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance between two points.
pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
