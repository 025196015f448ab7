use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grade exceeds ambient dimension (grade {grade}, dimension {dim})")]
    GradeOverflow { grade: usize, dim: usize },
    #[error("grade underflow: cannot contract grade {outer} by grade {inner}")]
    GradeUnderflow { outer: usize, inner: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported ambient dimension {0}")]
    UnsupportedDimension(usize),
    #[error("chain is not supported on the complex: {0}")]
    NotOnComplex(String),
    #[error("linear program failed: {0}")]
    LinearProgram(String),
    #[error("trace mismatch: {0}")]
    TraceMismatch(String),
    #[error("time map is not injective")]
    NonInjectiveTimeMap,
    #[error("open boundary: {0}")]
    OpenBoundary(String),
    #[error("critical simplex at t = {t}: |grad t| = {grad} below tolerance")]
    CriticalSimplex { t: f64, grad: f64 },
    #[error("mollifier under-resolved: delta {delta} < 2h = {min}")]
    MollifierUnderResolved { delta: f64, min: f64 },
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {}", .0.join("; "))]
    Scenario(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
