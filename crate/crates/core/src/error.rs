use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid dipole: {0}")]
    InvalidDipole(String),
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("invalid flattening factor {0}: must satisfy 0 <= f < 1")]
    InvalidFlattening(f64),
    #[error("singular geometry: sites {0} and {1} coincide")]
    SingularGeometry(usize, usize),
    #[error("eigen-solver failure: {0}")]
    SolverFailure(String),
    #[error("analytic ring eigenvalues require even N, got {0}")]
    UnsupportedParity(usize),
    #[error("reference coupling is zero; energies in units of V are undefined")]
    ZeroReferenceCoupling,
    #[error("invalid energy grid: {0}")]
    InvalidGrid(String),
    #[error("invalid broadening: {0}")]
    InvalidBroadening(String),
    #[error("invalid lineshape model: {0}")]
    InvalidLineshape(String),
    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),
    #[error("spectral support touches the grid boundary: {0}")]
    SupportTouchesBoundary(String),
    #[error("invalid lineshape table: {0}")]
    InvalidTable(String),
    #[error("invalid coupling strength {0} cm^-1: must be positive")]
    InvalidCoupling(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
