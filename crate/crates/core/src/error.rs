use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode count mismatch: expected {expected}, found {found}")]
    ModeMismatch { expected: usize, found: usize },

    #[error("states live on different bases ({left} vs {right})")]
    BasisMismatch { left: String, right: String },

    #[error("insufficient truncation headroom: n_max = {n_max}, need at least {required}")]
    Headroom { n_max: usize, required: usize },

    #[error("sector {n} exceeds truncation n_max = {n_max}")]
    SectorOutOfRange { n: usize, n_max: usize },

    #[error("sector dimension {dim} exceeds cap {cap} (M = {modes}, N = {particles}); try {suggestion}")]
    DimensionCap {
        dim: usize,
        cap: usize,
        modes: usize,
        particles: usize,
        suggestion: String,
    },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver failed on a {dim}x{dim} matrix: {reason}")]
    Eigen { dim: usize, reason: String },

    #[error("stability budget violated: |dt|*||h0|| = {product}, use |dt| <= {suggested}")]
    Stability { product: f64, suggested: f64 },

    #[error("time {t} outside trajectory range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("truncation leak {leak:e} exceeds threshold {threshold:e}")]
    Leak { leak: f64, threshold: f64 },

    #[error("CCR residual {residual:e} exceeds {threshold:e} at t = {t}; reduce the step size")]
    CcrDrift { residual: f64, threshold: f64, t: f64 },

    #[error("reduced density of order {k} requested for {particles} particles")]
    Order { k: usize, particles: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
