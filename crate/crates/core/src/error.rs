use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("grid size {m} must be a power of two and at least 16")]
    InvalidGrid { m: usize },
    #[error("non-finite coordinate at node {index}")]
    NonFinite { index: usize },
    #[error("degenerate speed: min |dγ/dx| = {min:e}, max = {max:e}")]
    DegenerateSpeed { min: f64, max: f64 },
    #[error("nodes {i} and {j} coincide (distance {distance:e})")]
    CoincidentPoints { i: usize, j: usize, distance: f64 },
    #[error("curve does not close: mean tangent magnitude {defect:e}")]
    OpenCurve { defect: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("bad kernel parameter: {0}")]
    BadParameter(String),
    #[error("envelope integral does not converge (increment ratio {ratio:.3})")]
    NotIntegrable { ratio: f64 },
    #[error("kernel table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlocalError {
    #[error("interfaces {i} and {j} too close for a kernel without H1 (distance {distance:e} <= {threshold:e})")]
    ProximityViolation {
        i: usize,
        j: usize,
        distance: f64,
        threshold: f64,
    },
    #[error("interface {i} is not embedded and its self-kernel lacks H1")]
    SelfProximity { i: usize },
    #[error("inconsistent system: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("speed collapse on interface {i}")]
    SpeedCollapse { i: usize },
    #[error("curvature blow-up on interface {i}: max |κ| = {max_curvature:e}")]
    CurvatureBlowup { i: usize, max_curvature: f64 },
    #[error("non-finite values on interface {i}")]
    NonFinite { i: usize },
    #[error("invalid solver input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Nonlocal(#[from] NonlocalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error("curve is not embedded: nodes {i} and {j} coincide")]
    NotEmbedded { i: usize, j: usize },
    #[error("pair separation {z:e} is below the diagonal cutoff")]
    DiagonalPair { z: f64 },
    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
