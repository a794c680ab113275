use thiserror::Error;

/// Errors produced while building meshes, assembling systems and running the
/// transport pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(usize, usize),

    #[error("non-manifold vertex {0}")]
    NonManifoldVertex(usize),

    #[error("vertex {0} is not referenced by any face")]
    IsolatedVertex(usize),

    #[error("face {face} has an out-of-range or repeated vertex index")]
    InvalidFace { face: usize },

    #[error("face {face} violates the triangle inequality (lengths {lengths:?})")]
    TriangleInequality { face: usize, lengths: [f64; 3] },

    #[error("edge ({0}, {1}) has non-positive or non-finite length {2}")]
    NonPositiveLength(usize, usize, f64),

    #[error("no length given for edge ({0}, {1})")]
    MissingEdgeLength(usize, usize),

    #[error("vertex {vertex} is out of range (mesh has {count} vertices)")]
    VertexOutOfRange { vertex: usize, count: usize },

    #[error("face {face} is out of range (mesh has {count} faces)")]
    FaceOutOfRange { face: usize, count: usize },

    #[error("vertices {0} and {1} are not connected by an edge")]
    NotAnEdge(usize, usize),

    #[error("tangent vector is based at vertex {based}, which is not an endpoint of edge ({from}, {to})")]
    WrongBasis {
        based: usize,
        from: usize,
        to: usize,
    },

    #[error("no embedding available: mesh was built from edge lengths only")]
    NoEmbedding,

    #[error("edge {0} lies on the boundary and cannot be flipped")]
    BoundaryEdge(usize),

    #[error("edge {0} is unflippable: the flipped diagonal would violate the triangle inequality")]
    Unflippable(usize),

    #[error("intrinsic Delaunay flipping stagnated; stuck edges: {0:?}")]
    DelaunayStagnated(Vec<usize>),

    #[error("symmetry degree must be at least 1, got {0}")]
    InvalidDegree(u32),

    #[error("time step multiplier must be positive, got {0}")]
    InvalidTimeMultiplier(f64),

    #[error("diffusion time must be positive, got {0}")]
    InvalidTime(f64),

    #[error("matrix is not positive definite (pivot failure); build the operators on the intrinsic Delaunay mesh")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("source set is empty")]
    EmptySources,

    #[error("all source vectors are zero; transported direction is undefined")]
    ZeroSources,

    #[error("source vertex {0} appears more than once")]
    DuplicateSource(usize),

    #[error("zero tangent vector")]
    ZeroVector,

    #[error("invalid barycentric coordinates {0:?}")]
    InvalidBarycentric([f64; 3]),

    #[error("invalid center problem: {0}")]
    InvalidProblem(String),

    #[error("antipodal points: logarithm is undefined on the cut locus")]
    Antipodal,

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
