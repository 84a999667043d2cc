//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised while validating inputs or running an operation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Cost matrix is not square.
    #[error("cost matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    /// Cost matrix entry differs from its transpose.
    #[error("cost matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    /// Cost matrix entry is negative or not finite.
    #[error("cost matrix entry ({i}, {j}) = {value} is negative or not finite")]
    NegativeEntry { i: usize, j: usize, value: f64 },
    /// Cost matrix has a nonzero diagonal entry.
    #[error("cost matrix diagonal entry {i} = {value} is not zero")]
    NonzeroDiagonal { i: usize, value: f64 },
    /// Two distinct points are at distance zero in a metric space.
    #[error("distinct points {i} and {j} are at distance zero")]
    ZeroOffDiagonal { i: usize, j: usize },
    /// The triangle inequality fails in a space declared metric.
    #[error("triangle inequality fails for ({i}, {j}, {k}) by {excess}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },
    /// A numeric parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    /// A probability vector is malformed.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// Two distributions (or a distribution and a space) disagree on the space.
    #[error("distributions live on different spaces ({left} vs {right} points)")]
    SpaceMismatch { left: usize, right: usize },
    /// The transport oracle was asked for a problem larger than it supports.
    #[error("support size {size} exceeds the oracle limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    /// The operation needs an ordered space.
    #[error("space kind `{0}` carries no total order")]
    Unordered(&'static str),
    /// The operation does not apply to this kind of space.
    #[error("operation `{op}` does not support space kind `{kind}`")]
    UnsupportedSpace { op: &'static str, kind: &'static str },
    /// A distribution puts mass outside the embedded grid of a torus.
    #[error("distribution puts mass on torus point {0}, outside the embedded grid")]
    OutsideEmbeddedGrid(usize),
    /// Conditional sampling from a plan row without mass.
    #[error("plan row {0} has zero mass")]
    ZeroRowMass(usize),
    /// An instance sequence is malformed.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    /// The mixture-instance condition fails at a given index.
    #[error("mixture condition fails at index {index} (difference {difference})")]
    MixtureCondition { index: usize, difference: f64 },
    /// Two sketches cannot be compared.
    #[error("incomparable sketches: {0}")]
    IncomparableSketches(String),
    /// A collection is empty or too small.
    #[error("collection too small: need at least {needed}, got {got}")]
    CollectionTooSmall { needed: usize, got: usize },
    /// A file could not be parsed.
    #[error("failed to parse {what}: {reason}")]
    Parse { what: String, reason: String },
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
