//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by the planner, identifier, controller and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch { context: &'static str, expected: String, got: String },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("integration blew up at t = {t}: |x| = {norm}")]
    BlowUp { t: f64, norm: f64 },
    #[error("input matrix is singular or ill-conditioned (condition number {cond:e})")]
    SingularInput { cond: f64 },
    #[error("boundary value problem infeasible: {0}")]
    InfeasibleBvp(String),
    #[error("lattice has no reachable connectivity: {0}")]
    EmptyGrid(String),
    #[error("tightened set is empty: {0}")]
    EmptyTightenedSet(String),
    #[error("no nominal parameter sample lies inside the current model set")]
    NoNominalInSet,
    #[error("start or goal infeasible: {0}")]
    StartGoalInfeasible(String),
    #[error("no path between start and goal")]
    NoPath,
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("serialization error: {0}")]
    Serialization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(context: &'static str, expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch { context, expected: expected.to_string(), got: got.to_string() }
}
