use thiserror::Error;

/// Errors raised by the numerical kernels, strategies and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("iterative routine did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {value:e})")]
    NotPositiveSemidefinite { value: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    #[error("quantizer step search failed: {0}")]
    SearchFailure(String),

    #[error("argument outside its domain: {0}")]
    DomainError(String),

    #[error("power budget exceeded: {requested} requested, {budget} available")]
    BudgetExceeded { requested: f64, budget: f64 },

    #[error("negative power: {0}")]
    NegativePower(String),

    #[error("empty problem: {0}")]
    EmptyProblem(String),

    #[error("every stream was rejected; no feasible allocation")]
    NoFeasibleAllocation,

    #[error("water-level quadratic has a negative discriminant ({0:e})")]
    NegativeDiscriminant(f64),

    #[error("truncated rate expression is not positive definite")]
    ApproximationInvalid,

    #[error("unknown {what} `{name}`")]
    UnknownStrategy { what: &'static str, name: String },

    #[error("curve `{0}` missing from sweep output")]
    MissingCurve(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
