use thiserror::Error;

/// Errors raised by the library. Numeric payloads are reported in `f64`
/// regardless of the scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies at distance {distance} from the domain, beyond the uniqueness bound {limit}")]
    OutsideUniquenessRegion { distance: f64, limit: f64 },

    #[error("point is interior (distance {distance} to the boundary); the normal cone is {{0}}")]
    InteriorPoint { distance: f64 },

    #[error("point is not on the boundary (distance {distance} to the domain)")]
    NotOnBoundary { distance: f64 },

    #[error("normal cone is multi-dimensional with {} generators", generators.len())]
    AmbiguousNormal { generators: Vec<Vec<f64>> },

    #[error("no interior-ball direction is registered for domain kind {0}")]
    NoDirection(&'static str),

    #[error("point lies outside the domain (distance {distance})")]
    OutsideDomain { distance: f64 },

    #[error("nearest-point iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("value {value} outside the admissible range (0, {upper}]")]
    OutOfRange { value: f64, upper: f64 },

    #[error("argument {argument} of the inverse modulus exceeds mu(T) = {upper}")]
    ArgumentOutOfMuRange { argument: f64, upper: f64 },

    #[error("initial point lies outside the domain (distance {distance})")]
    StartOutsideDomain { distance: f64 },

    #[error("step starting at t = {time} still leaves the domain by {excursion} after {bisections} bisections")]
    StepCollapse { time: f64, excursion: f64, bisections: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
