//! Error type shared across the solver.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A domain-validation failure (bad mesh parameters, mismatched spaces,
    /// wrong data lengths, stale caches).
    Validation(String),
    /// Unsupported configuration value (e.g. quadrature degree).
    Config(String),
    /// Structurally or numerically singular matrix; carries the pivot row.
    SingularMatrix { pivot_row: usize },
    /// The upper-domain block system failed to factorize, which for preset
    /// flows means the resolvent parameter is too small.
    CoercivityFailure { lambda: f64 },
    /// An iterative probe failed to converge; carries the final residual.
    NumericalFailure { what: &'static str, residual: f64 },
    /// Point location outside the requested subdomain.
    PointLocation { x: f64, y: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::SingularMatrix { pivot_row } => {
                write!(f, "singular matrix: zero pivot at row {pivot_row}")
            }
            Error::CoercivityFailure { lambda } => write!(
                f,
                "coercivity failure at lambda = {lambda}: the upper block system \
                 is singular; retry with a larger resolvent parameter"
            ),
            Error::NumericalFailure { what, residual } => {
                write!(f, "{what} did not converge (residual {residual:e})")
            }
            Error::PointLocation { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the requested subdomain")
            }
        }
    }
}
