//! Crate-wide error type.
//!
//! Every fallible operation in the library reports through [`Error`]. The
//! variants are grouped by origin: domain violations in the algebra layer,
//! expression parsing, numerical breakdowns in quadrature or root finding,
//! and configuration problems surfaced by the experiment runner.

use thiserror::Error;

/// One position-tagged problem found while validating a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigProblem {
    /// 1-based line in the config source, 0 when not tied to a line.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Multi-index or exterior-element domain violation (bad entries,
    /// mismatched ambient dimension or degree, not a permutation).
    #[error("domain error: {0}")]
    Domain(String),

    /// Expression text could not be parsed. `col` is a 1-based byte column.
    #[error("parse error at column {col}: {message}")]
    Parse { col: usize, message: String },

    /// Evaluation hit a singular point (division by ~0, log of ~0).
    /// Carries a rendering of the offending subexpression.
    #[error("singular point while evaluating `{subexpr}` at z = {at}")]
    SingularPoint { subexpr: String, at: String },

    /// A zero sits on (or within tolerance of) an integration contour.
    #[error("zero on the boundary contour near {location}")]
    BoundaryZero { location: String },

    /// Refinement stopped without meeting the requested tolerance.
    #[error("quadrature did not converge: achieved {achieved:.3e}, wanted {wanted:.3e}")]
    Accuracy { achieved: f64, wanted: f64 },

    /// Inconsistent or degenerate input data (curve not reduced, field list
    /// of wrong length, curve contained in a divisor, ...).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// The curve is stationary (vanishing Fubini-Study pullback) at a point
    /// where a frame-dependent quantity was requested.
    #[error("stationary point of the curve at z = {at}")]
    StationaryPoint { at: String },

    /// Every candidate minor vanished at the probe point.
    #[error("degenerate probe: all frame minors vanish at z = {at}")]
    DegenerateProbe { at: String },

    /// Config file rejected; carries every problem found, not just the first.
    #[error("invalid configuration ({} problem(s))", .0.len())]
    Config(Vec<ConfigProblem>),

    /// Filesystem problem while reading configs or writing reports.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Convenience constructor used by the expression evaluator.
    pub(crate) fn singular(subexpr: impl Into<String>, at: num_complex::Complex64) -> Self {
        Error::SingularPoint {
            subexpr: subexpr.into(),
            at: format!("{at}"),
        }
    }
}
