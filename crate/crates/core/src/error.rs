use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate {x} outside the domain (0, {upper}]")]
    OutOfDomain { x: f64, upper: f64 },

    #[error("projection produced a non-finite value in cell {cell}")]
    ProjectionFailure { cell: usize },

    #[error("unknown kernel id `{0}`")]
    UnknownKernel(String),

    #[error("non-finite flux at cell {cell}, point {point}")]
    DivergedState { cell: usize, point: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("initial data not resolved by the mesh: cell {cell} has average {average:e}")]
    UnresolvableInitialData { cell: usize, average: f64 },

    #[error("time step halved {halvings} times at t = {time} without producing positive averages")]
    NonConvergence { time: f64, halvings: usize },

    #[error("t = {t} outside the validity window of `{case}` (t <= {limit})")]
    Validity { case: String, t: f64, limit: f64 },

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("reference quadrature failed to converge on [{a}, {b}]")]
    OracleFailure { a: f64, b: f64 },

    #[error("mismatched domains: {0}")]
    MismatchedDomains(String),
}
