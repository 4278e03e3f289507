use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field has {found} values but the grid has {expected} nodes")]
    GridMismatch { expected: usize, found: usize },

    /// The density does not satisfy ρ ∈ L^{n/2} ∩ L^∞.
    #[error("density hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("time {t} lies outside the auxiliary window [0, {t0}]")]
    OutOfWindow { t: f64, t0: f64 },

    #[error("infeasible proof constants: denominator {denominator:e} is not positive; increase the T1 slack")]
    InfeasibleConstants { denominator: f64 },

    #[error("hypothesis report is not satisfied; no blow-up bound available")]
    NoBound,

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
}
