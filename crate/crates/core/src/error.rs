use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T> = std::result::Result<T, FracError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("evaluation did not converge: {0}")]
    NonConvergent(String),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("order too close to 1 at t = {t}: alpha = {alpha}")]
    SingularOrder { t: f64, alpha: f64 },

    #[error("quadrature error estimate {estimate:e} exceeds budget {budget:e}")]
    QuadratureFailure { estimate: f64, budget: f64 },

    #[error("grid with {n} subintervals is too coarse (need at least {min})")]
    DegenerateGrid { n: usize, min: usize },

    #[error("Newton iteration failed at node {node} (t = {t})")]
    NewtonDivergence { node: usize, t: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("bound violated at node {node} (t = {t}): {lower} <= {value} <= {upper} fails{}", if *.hypothesis_held { "" } else { " (sampled bound hypothesis did not hold)" })]
    BoundViolation {
        node: usize,
        t: f64,
        lower: f64,
        value: f64,
        upper: f64,
        hypothesis_held: bool,
    },

    #[error("function has no interior maximum")]
    NoInteriorMax,

    #[error("degenerate case: {0}")]
    DegenerateCase(String),

    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl FracError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FracError::InvalidParam(msg.into())
    }
}
