use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Every variant maps onto one of the CLI exit-code classes through
/// [`MlcError::class`].
#[derive(Debug, Error)]
pub enum MlcError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(usize, usize),

    #[error("boundary edge ({0}, {1}) borders a single face")]
    BoundaryEdge(usize, usize),

    #[error("non-manifold vertex {0}: its faces do not form a single fan")]
    NonManifoldVertex(usize),

    #[error("surface is not orientable (conflict at face {0})")]
    NonOrientable(usize),

    #[error("degenerate triangle at face {face}: {reason}")]
    DegenerateFace { face: usize, reason: String },

    #[error("face {0} is not a triangle")]
    NonTriangularFace(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} has {got} entries, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("line search failed at Newton iteration {iteration}")]
    LineSearch { iteration: usize },

    #[error("Newton iteration cap {0} reached (gradient norm {1:e})")]
    IterationCap(usize, f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used for exit codes and FFI status values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Precondition,
    Numerical,
}

impl MlcError {
    pub fn class(&self) -> ErrorClass {
        use MlcError::*;
        match self {
            Io { .. } | Parse { .. } | InvalidArgument(_) | NonTriangularFace(_) => ErrorClass::Usage,
            NonManifoldEdge(..)
            | BoundaryEdge(..)
            | NonManifoldVertex(_)
            | NonOrientable(_)
            | DegenerateFace { .. }
            | DimensionMismatch { .. }
            | Precondition(_) => ErrorClass::Precondition,
            NoConvergence { .. } | LineSearch { .. } | IterationCap(..) | Numerical(_) => {
                ErrorClass::Numerical
            }
        }
    }

    /// Short machine-readable tag for diagnostics.
    pub fn kind(&self) -> &'static str {
        use MlcError::*;
        match self {
            Io { .. } => "io",
            Parse { .. } => "parse",
            NonManifoldEdge(..) => "non_manifold_edge",
            BoundaryEdge(..) => "boundary_edge",
            NonManifoldVertex(_) => "non_manifold_vertex",
            NonOrientable(_) => "non_orientable",
            DegenerateFace { .. } => "degenerate_face",
            NonTriangularFace(_) => "non_triangular_face",
            InvalidArgument(_) => "invalid_argument",
            DimensionMismatch { .. } => "dimension_mismatch",
            Precondition(_) => "precondition",
            NoConvergence { .. } => "no_convergence",
            LineSearch { .. } => "line_search",
            IterationCap(..) => "iteration_cap",
            Numerical(_) => "numerical",
        }
    }
}

pub type Result<T, E = MlcError> = std::result::Result<T, E>;
