use thiserror::Error;

/// Every failure mode the library reports.
///
/// Variants mirror the documented error contracts of the individual
/// operations; numerical payloads are carried as `f64` regardless of the
/// scalar type in use.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point ({x}, {y}) lies outside the domain")]
    PointOutsideDomain { x: f64, y: f64 },
    #[error("coincident points (separation {separation:e})")]
    CoincidentPoints { separation: f64 },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("iterate escaped the domain and damping reached its floor")]
    EscapedDomain,
    #[error("lambda = {0} is outside (0, 1)")]
    LambdaOutOfRange(f64),
    #[error("index {index} outside band {lo}..={hi}")]
    IndexOutOfBand { index: usize, lo: usize, hi: usize },
    #[error("matrix is not circulant (deviation {0:e})")]
    NotCirculant(f64),
    #[error("jacobian is numerically singular at pivot {pivot}")]
    JacobianSingular { pivot: usize },
    #[error("arclength step fell below the floor {0:e}")]
    StepFloorReached(f64),
    #[error("mesh under-resolved: peak width {delta:e} spans fewer than 4 cells of size {spacing:e}")]
    MeshUnderResolved { delta: f64, spacing: f64 },
    #[error("eigen-solver weight is not positive at node {0}")]
    WeightNotPositive(usize),
    #[error("eigen-solver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("expected {expected} peaks, found {found}")]
    WrongPeakCount { expected: usize, found: usize },
    #[error("profile window of radius {0} leaves the resolved region")]
    WindowExceedsGrid(f64),
    #[error("quadrature did not converge (estimated error {0:e})")]
    QuadratureNotConverged(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
