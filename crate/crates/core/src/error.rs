use thiserror::Error;

use crate::nerve::Simplex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("simplex {0:?} repeats a vertex")]
    DegenerateSimplex(Vec<usize>),
    #[error("simplex {0:?} has dimension above the cap of 4")]
    DimensionTooLarge(Vec<usize>),
    #[error("vertex {vertex} out of range for a nerve with {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("simplex {0:?} is not in the nerve")]
    UnknownSimplex(Vec<usize>),
    #[error("coboundary of a degree-{0} cochain would exceed the dimension cap")]
    DegreeOverflow(usize),
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("twist is not a Z2 cocycle on {0:?}")]
    TwistNotCocycle(Simplex),
    #[error("operation unsupported for {0} coefficients")]
    UnsupportedCoefficient(String),
    #[error("cochain is not a cocycle: coboundary is nonzero on {0:?}")]
    NotACocycle(Simplex),
    #[error("U(1) cochain is not a cocycle modulo 1 on {0:?}")]
    NotU1Cocycle(Simplex),
    #[error("real lift has coboundary {value} on {simplex:?}, too far from an integer")]
    LiftNotIntegral { simplex: Simplex, value: f64 },
    #[error("integer {0} does not fit in a machine word")]
    Overflow(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("map is not an automorphism: {0}")]
    InvalidAutomorphism(String),
    #[error("kernel element {kernel} does not commute with {element}")]
    NotCentral { kernel: usize, element: usize },
    #[error("projection is not a homomorphism at ({x}, {y})")]
    NotHomomorphism { x: usize, y: usize },
    #[error("section fails q(s({0})) = {0}")]
    BadSection(usize),
    #[error("projection does not intertwine the involutions at element {0}")]
    NotEquivariant(usize),
    #[error("kernel data is inconsistent: {0}")]
    BadKernel(String),
    #[error("lift on edge {edge:?} projects to {found}, expected {expected}")]
    LiftMismatch { edge: Simplex, expected: usize, found: usize },
    #[error("obstruction value on {0:?} is not in the kernel")]
    ValueNotInKernel(Simplex),
    #[error("twisted 2-cocycle identity fails on {0:?}")]
    CocycleIdentityViolated(Simplex),
    #[error("transition data fails the twisted cocycle condition on {0:?}")]
    NotTwistedCocycle(Simplex),
    #[error("group data does not match: {0}")]
    GroupMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("truncation {truncation} is below the required {required}")]
    TruncationTooSmall { truncation: usize, required: usize },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("charts {0} and {1} do not overlap")]
    NoOverlap(usize, usize),
    #[error("base is not a closed surface")]
    NotClosedSurface,
    #[error("point {0:?} lies outside the charts")]
    PointOutsideCharts(Vec<f64>),
    #[error("invalid partition of unity: {0}")]
    InvalidPartition(String),
    #[error("invalid transition family: {0}")]
    InvalidTransition(String),
}
