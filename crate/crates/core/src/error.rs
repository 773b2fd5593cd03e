use thiserror::Error;

#[derive(Debug, Error)]
pub enum StokesError {
    #[error("unknown theory `{0}`")]
    UnknownTheory(String),
    #[error("degree condition violated: {0}")]
    DegreeViolation(String),
    #[error("missing or unexpected family parameter: {0}")]
    BadParameter(String),
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("spectral parameter must be nonzero")]
    ZeroSpectralParameter,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),
    #[error("kernel singularity: charges {0} and {1} have aligned central charges")]
    KernelSingularity(usize, usize),
    #[error("fixed point iteration did not converge after {iterations} iterations (last deltas {last_deltas:?})")]
    NotConverged { iterations: usize, last_deltas: Vec<f64> },
    #[error("ODE step size collapsed at tau = {0}")]
    StepCollapse(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("eigenvalues too close to select a subdominant line (relative gap {0:e})")]
    EigenvalueTie(f64),
    #[error("invalid sector indices: {0}")]
    IndexError(String),
    #[error("degenerate cross product in hexapod determinant")]
    RankError,
    #[error("PDE residual diverged: {0}")]
    Divergence(String),
    #[error("grid size {nmesh} exceeds the {method} cap of {cap}")]
    MemoryLimit { method: &'static str, nmesh: usize, cap: usize },
    #[error("grid size {0} is not of the form 2^j - 1 required by the spectral backend")]
    GridShape(usize),
    #[error("point {0} lies outside the interpolation domain")]
    OutOfDomain(String),
    #[error("degenerate Richardson fit: {0}")]
    DegenerateFit(String),
    #[error("linear solver failure: {0}")]
    LinearSolve(String),
    #[error("both arguments are zero")]
    BothZero,
    #[error("c must be nonzero")]
    ZeroC,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("ray collision: spectral parameter lies on the ray of charge index {0}")]
    RayCollision(usize),
}

pub type Result<T> = std::result::Result<T, StokesError>;
