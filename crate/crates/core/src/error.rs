//! Crate-wide error type.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Domain parameters violate their constraints (dimension, m, gamma, alpha).
    InvalidSpec(String),
    /// Grid construction or grid/field mismatch.
    InvalidGrid(String),
    /// Axis index outside 0..dim.
    AxisOutOfRange { axis: usize, dim: usize },
    /// Point outside the open sector or at the origin.
    OutOfDomain(String),
    /// Requested time not covered by a trajectory.
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    /// Operation requires a different regime of alpha vs 2/(gamma+m).
    RegimeMismatch { expected: &'static str, found: &'static str },
    /// Quadrature cannot meet tolerance on this grid (mesh too coarse for the
    /// requested diffusion time, or window pushed everything off the grid).
    Quadrature(String),
    /// NaN or infinity encountered where finite values are required.
    NonFinite(String),
    /// An integral that must be finite failed to converge.
    Divergent(String),
    /// Iteration failed to converge to the requested tolerance.
    NonConvergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(s) => write!(f, "invalid domain spec: {s}"),
            Error::InvalidGrid(s) => write!(f, "invalid grid: {s}"),
            Error::AxisOutOfRange { axis, dim } => {
                write!(f, "axis {axis} out of range for dimension {dim}")
            }
            Error::OutOfDomain(s) => write!(f, "point outside domain: {s}"),
            Error::TimeOutOfRange { t, lo, hi } => {
                write!(f, "time {t} outside stored range [{lo}, {hi}]")
            }
            Error::RegimeMismatch { expected, found } => {
                write!(f, "regime mismatch: expected {expected}, got {found}")
            }
            Error::Quadrature(s) => write!(f, "quadrature failure: {s}"),
            Error::NonFinite(s) => write!(f, "non-finite value: {s}"),
            Error::Divergent(s) => write!(f, "divergent integral: {s}"),
            Error::NonConvergence(s) => write!(f, "no convergence: {s}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
