use thiserror::Error;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Budget,
    Topology,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("series did not truncate at z = {z} within {terms} terms")]
    TruncationFailure { z: f64, terms: usize },
    #[error("spectral decay order m = {m:.3} does not exceed the required {required:.3}")]
    SmoothnessViolation { m: f64, required: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("level c = {level} is degenerate on {cells} grid cells")]
    DegenerateLevel { level: f64, cells: usize },
    #[error("topology violation: {0}")]
    TopologyViolation(String),
    #[error("orientation ambiguous: {disagree} of {segments} segments disagree with the majority")]
    OrientationAmbiguous { disagree: usize, segments: usize },
    #[error("axis intervals [{a0}, {a1}] and [{b0}, {b1}] partially overlap")]
    NestingConflict { a0: f64, a1: f64, b0: f64, b1: f64 },
    #[error("derivative budget exceeded: m = {m:.3} but p_hi + 1 + k = {required:.3}")]
    BudgetExceeded { m: f64, required: f64 },
    #[error("events in [{lo}, {hi}] could not be separated; retry with n_slices >= {suggested}")]
    UnresolvedEvent { lo: f64, hi: f64, suggested: usize },
    #[error("critical point search did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("index mismatch: event kind implies {expected}, Hessian gives {hessian}")]
    IndexMismatch { expected: u8, hessian: u8 },
    #[error("Euler balance fails at param {param}: c0 - c1 + c2 = {lhs}, sum(2 - 2mu) = {rhs}")]
    InconsistentEuler { param: f64, lhs: i64, rhs: i64 },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_) | Error::InvalidConfig(_) | Error::InvalidInput(_) => ErrorClass::Config,
            Error::TruncationFailure { .. }
            | Error::SmoothnessViolation { .. }
            | Error::GridTooCoarse(_)
            | Error::BudgetExceeded { .. }
            | Error::NoConvergence { .. } => ErrorClass::Budget,
            Error::DegenerateLevel { .. }
            | Error::TopologyViolation(_)
            | Error::OrientationAmbiguous { .. }
            | Error::NestingConflict { .. }
            | Error::IndexMismatch { .. }
            | Error::InconsistentEuler { .. } => ErrorClass::Topology,
            Error::UnresolvedEvent { .. } => ErrorClass::Unresolved,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
