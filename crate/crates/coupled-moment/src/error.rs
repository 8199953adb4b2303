use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("degenerate volume: top coefficient {value:e} below threshold {threshold:e} ({which})")]
    DegenerateVolume { value: f64, threshold: f64, which: String },
    #[error("not Kähler at node {node} of component {component}: smallest eigenvalue {value:e}")]
    NotKahler { component: usize, node: usize, value: f64 },
    #[error("outside the positive cone at node {node}: value {value:e}")]
    NotInCone { node: usize, value: f64 },
    #[error("flow blow-up: {0}")]
    FlowBlowup(String),
    #[error("inverse map did not converge: {0}")]
    Inverse(String),
    #[error("interpolation error: {0}")]
    Interpolation(String),
    #[error("gauge error: {0}")]
    Gauge(String),
    #[error("gauge not fixed: {0}")]
    GaugeNotFixed(String),
    #[error("field is not holomorphic: {0}")]
    NotHolomorphic(String),
    #[error("path type error: {0}")]
    PathType(String),
    #[error("line search stalled: {0}")]
    Stall(String),
    #[error("diverged: {0}")]
    Diverged(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
