use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid functions live on different domains")]
    DomainMismatch,

    #[error("degenerate gradient: |Xu| vanishes on cell {cell} with p < 2 and no regularization")]
    DegenerateGradient { cell: usize },

    #[error("Rayleigh quotient undefined for the zero function")]
    UndefinedQuotient,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-conditioned subspace frame (Gram condition number {condition:.3e})")]
    Frame { condition: f64 },

    #[error("linear solver breakdown: {0}")]
    Solver(String),

    #[error("descent did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<crate::spectrum::EigenPair>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
