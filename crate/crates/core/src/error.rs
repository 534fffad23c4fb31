use thiserror::Error;

/// Errors surfaced by the model oracles, gap evaluation, solvers and
/// certificate routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("monotonicity violation: {0}")]
    MonotonicityViolation(String),

    #[error("set is unbounded: {0}")]
    UnboundedSet(String),

    #[error("point is not in the set (membership residual {residual:.3e} > {tol:.3e})")]
    NotInSet { residual: f64, tol: f64 },

    #[error("{what} did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("target is not in the convex hull of the given points (best residual {residual:.3e})")]
    TargetNotInHull { residual: f64 },

    #[error("lower level infeasible: g_D(x) = {gap:.3e} exceeds tolerance {tol:.3e}")]
    LowerLevelInfeasible { gap: f64, tol: f64 },

    #[error("certificate input is not certified; run kkt_certificate first")]
    UncertifiedInput,

    #[error("unsupported set dimension for this diagnostic: polytope faces are enumerated only for n <= {max}, got n = {got}")]
    UnsupportedSetDimension { max: usize, got: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,
}
