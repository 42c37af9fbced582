use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {vertex}, but the mesh has {count} vertices")]
    VertexOutOfRange { face: usize, vertex: usize, count: usize },

    #[error("face {face} is not a triangle ({arity} vertices)")]
    NotATriangle { face: usize, arity: usize },

    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },

    #[error("degenerate (zero-area) triangle: face {face}")]
    DegenerateTriangle { face: usize },

    #[error("non-manifold edge ({a}, {b}) at face {face}")]
    NonManifoldEdge { face: usize, a: usize, b: usize },

    #[error("open boundary: edge ({a}, {b}) of face {face} has no opposite face")]
    OpenBoundary { face: usize, a: usize, b: usize },

    #[error("inconsistent orientation across edge ({a}, {b}) at face {face}")]
    InconsistentOrientation { face: usize, a: usize, b: usize },

    #[error("non-manifold vertex {vertex}")]
    NonManifoldVertex { vertex: usize },

    #[error("isolated vertex {vertex}")]
    IsolatedVertex { vertex: usize },

    #[error("discrete Gauss-Bonnet violated: sum a*K0 = {total}, expected {expected}")]
    GaussBonnet { total: f64, expected: f64 },

    #[error("icosphere subdivision level {0} exceeds the maximum of 8")]
    LevelTooLarge(u32),

    #[error("field length {got} does not match vertex count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("conformal factor is not admissible for the {cone} cone (worst vertex {vertex}, curvature {curvature:.3e})")]
    Inadmissible { cone: &'static str, vertex: usize, curvature: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("surface has no vertex positions")]
    MissingPositions,

    #[error("path node {node} is not admissible")]
    InadmissibleNode { node: usize },

    #[error("boundary rows of the two paths differ")]
    BoundaryMismatch,

    #[error("Newton solve failed: {reason} (iterations {iterations}, residual {residual:.3e})")]
    Newton {
        reason: String,
        iterations: usize,
        residual: f64,
        best: Option<Box<crate::path::TimePath>>,
    },

    #[error("geodesic continuation failed at epsilon = {epsilon:.3e}: {source}")]
    Continuation {
        epsilon: f64,
        #[source]
        source: Box<Error>,
        last_good: Option<Box<crate::geodesic::SolveReport>>,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("flow step size underflow at t = {time:.6}")]
    StepUnderflow {
        time: f64,
        trace: Box<crate::flow::FlowTrace>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}
