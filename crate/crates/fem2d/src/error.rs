use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("non-conforming mesh: hanging vertex {vertex} on edge ({a}, {b})")]
    HangingVertex { vertex: usize, a: usize, b: usize },

    #[error("edge ({a}, {b}) is shared by more than two triangles")]
    OverSharedEdge { a: usize, b: usize },

    #[error("triangle {tri} has inconsistent (non counter-clockwise) orientation")]
    BadOrientation { tri: usize },

    #[error("triangle {tri} is degenerate or violates the minimum-angle floor ({angle_deg:.3} deg < {floor_deg:.3} deg)")]
    MinAngle {
        tri: usize,
        angle_deg: f64,
        floor_deg: f64,
    },

    #[error("invalid vertex index {index} in triangle {tri}")]
    BadVertexIndex { tri: usize, index: usize },

    #[error("refinement closure did not terminate within {cap} recursion levels")]
    ClosureOverflow { cap: usize },

    #[error("edge {edge} is not an edge of element {element}")]
    EdgeNotOnElement { element: usize, edge: usize },

    #[error("edges {f} and {f_prime} are not adjacent through an element sharing {f}")]
    EdgesNotAdjacent { f: usize, f_prime: usize },

    #[error("unsupported polynomial order k = {k}: {reason}")]
    UnsupportedOrder { k: usize, reason: &'static str },

    #[error("quadrature degree {degree} exceeds the supported maximum {max}")]
    UnsupportedQuadDegree { degree: usize, max: usize },

    #[error("point ({x}, {y}) is not on edge {edge} (distance {dist:.3e})")]
    PointOffEdge { edge: usize, x: f64, y: f64, dist: f64 },

    #[error("point ({x}, {y}) is outside element {element}")]
    PointOutsideElement { element: usize, x: f64, y: f64 },

    #[error("local system on element {element} is singular: {reason}")]
    SingularLocalSystem { element: usize, reason: &'static str },

    #[error("matrix is not symmetric positive definite: {reason}")]
    NotSpd { reason: String },

    #[error("conjugate gradient did not converge in {iters} iterations (relative residual {residual:.3e})")]
    CgDivergence {
        iters: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("recovered edge moment mismatch on edge {edge}: {minus:.6e} (from K-) vs {plus:.6e} (from K+); the Galerkin solve looks broken")]
    FluxMomentMismatch { edge: usize, minus: f64, plus: f64 },

    #[error("mesh checksum mismatch: expected {expected:#x}, got {got:#x}")]
    ChecksumMismatch { expected: u64, got: u64 },

    #[error("coefficient on subdomain {subdomain} is not SPD or violates the eigenvalue-ratio bound kappa = {kappa}")]
    BadCoefficient { subdomain: usize, kappa: f64 },

    #[error("Dirichlet boundary is empty; the problem requires meas(Gamma_D) != 0")]
    EmptyDirichletBoundary,

    #[error("exact-solution oracle failed: {0}")]
    OracleFailure(String),

    #[error("non-finite value while evaluating the exact gradient at ({x}, {y})")]
    NonFiniteExactGradient { x: f64, y: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("{0}")]
    Invalid(String),
}
