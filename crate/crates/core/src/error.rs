use thiserror::Error;

/// Failures raised by the geometric operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("points are linearly dependent (rank {rank} < {expected})")]
    DependentPoints { rank: usize, expected: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subspaces do not form a valid m-pair (they intersect)")]
    InvalidPair,

    #[error("frame matrix is singular")]
    SingularFrame,

    #[error("pairs are not in general position: {0} is singular")]
    NotInGeneralPosition(&'static str),

    #[error("cross-ratio trace {0} is not positive")]
    NonPositiveTrace(f64),

    #[error("normalizing map undefined at the requested subspace: {0}")]
    MapUndefined(String),

    #[error("displaced normalizing subspace cannot be expressed in the adapted frame")]
    FramingFailure,

    #[error("subspace is tangent to the quadric")]
    TangentSubspace,

    #[error("frame is not polar-adapted: cross block residual {0:e}")]
    NotPolarAdapted(f64),

    #[error("degenerate {0} block")]
    DegenerateBlock(&'static str),

    #[error("subspace meets the fixed normalizing subspace")]
    NotComplementary,

    #[error("quadric matrix is not symmetric (asymmetry {0:e})")]
    NonSymmetricQuadric(f64),

    #[error("quadric matrix is degenerate")]
    DegenerateQuadric,

    #[error("non-finite value in input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, GeomError>;
