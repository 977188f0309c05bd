use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point t = {t} lies outside the fracture parameter range [{lo}, {hi}]")]
    OutsideFracture { t: f64, lo: f64, hi: f64 },

    #[error("total aperture d = {d} at t = {t} does not exceed the minimum aperture {d_min}")]
    ApertureTooSmall { t: f64, d: f64, d_min: f64 },

    #[error("aperture too large: interface {side} leaves the domain at t = {t} (x1 = {x1})")]
    ApertureExitsDomain { side: u8, t: f64, x1: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite sample of `{field}` at t = {t}")]
    NonFiniteSample { field: &'static str, t: f64 },

    #[error("inverted elements (non-positive area): {ids:?}")]
    InvertedElements { ids: Vec<usize> },

    #[error("facet ({a}, {b}) is adjacent to {count} elements")]
    BadFacetAdjacency { a: usize, b: usize, count: usize },

    #[error("interface grid error: {0}")]
    InterfaceGrid(String),

    #[error("variant {variant} cannot be assembled on a {mode} mesh")]
    VariantMeshMismatch { variant: String, mode: String },

    #[error("missing pairing for interface element {0}")]
    MissingPairing(usize),

    #[error("quadrature order {order} is insufficient for polynomial degree {degree}")]
    QuadratureOrder { order: usize, degree: usize },

    #[error("missing permeability for subdomain {0}")]
    MissingPermeability(&'static str),

    #[error("solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64, best: Vec<f64> },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("conjugate gradients requested for a non-symmetric matrix (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("averaging segment at t = {t} is not covered by the fracture mesh: {reason}")]
    SegmentOutsideFracture { t: f64, reason: String },

    #[error("point ({x}, {y}) is not inside any mesh element")]
    PointNotFound { x: f64, y: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
