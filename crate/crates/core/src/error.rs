use thiserror::Error;

/// Errors raised by lattice, state and stability operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of bounds for lattice of size {lattice_size}")]
    SiteOutOfBounds { site: usize, lattice_size: usize },

    #[error("lattice size {0} is not supported (must be between 1 and {max})", max = crate::car::MAX_SITES)]
    LatticeSize(usize),

    #[error("lattice size mismatch: expected {expected}, found {found}")]
    LatticeMismatch { expected: usize, found: usize },

    #[error("region must be nonempty")]
    EmptyRegion,

    #[error("region must be a proper, nonempty subset of the lattice")]
    DegenerateRegion,

    #[error("element is not supported in the claimed region (residual {residual:e})")]
    SupportMismatch { residual: f64 },

    #[error("supports {0} and {1} overlap")]
    OverlappingSupports(crate::car::Region, crate::car::Region),

    #[error("matrix dimension {found} does not match 2^L = {expected}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not self-adjoint (residual {0:e})")]
    NotSelfAdjoint(f64),

    #[error("operator is not even under the grading (residual {0:e})")]
    NotEven(f64),

    #[error("operator is not odd under the grading (residual {0:e})")]
    NotOdd(f64),

    #[error("operator is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("perturbation is not orthogonal to the constraint algebra (residual {0:e})")]
    NotOrthogonal(f64),

    #[error("state is singular (smallest eigenvalue {min:e}, largest {max:e})")]
    SingularState { min: f64, max: f64 },

    #[error("matrix is not a density matrix: {0}")]
    InvalidDensity(String),

    #[error("perturbation scale {lambda:e} exceeds the positivity bound {bound:e}")]
    ScaleTooLarge { lambda: f64, bound: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("maximizer did not converge after {iterations} iterations (last |dF| = {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
