use thiserror::Error;

/// Errors raised by the speed-limit library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QslError {
    #[error("state vector has zero norm")]
    InvalidState,
    #[error("dimension {0} is too small, need at least 2")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("fidelity {0} lies outside [0, 1]")]
    InvalidFidelity(f64),
    #[error("z = {z} lies outside the feasible interval for fidelity {delta}")]
    OutsideFeasibleInterval { delta: f64, z: f64 },
    #[error("objective is singular at |z| = 1")]
    Singular,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("state is stationary under the Hamiltonian; speed limits are undefined")]
    StationaryState,
    #[error("energy gap must be positive (eps0 = {eps0}, eps1 = {eps1})")]
    DegenerateGap { eps0: f64, eps1: f64 },
    #[error("fidelity {delta} cannot be reached from Bloch height z = {z}")]
    Unreachable { delta: f64, z: f64 },
    #[error("state leaks {0:e} outside the two-level subspace")]
    NotEffectiveQubit(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tangent vectors are attached to different base states")]
    BaseMismatch,
    #[error("state is orthogonal to the reference state")]
    OutsideOmega,
    #[error("geodesic endpoints are coincident or orthogonal (distance {0})")]
    DegenerateGeodesic(f64),
    #[error("curve is not on a geodesic sphere (radius spread {0:e})")]
    NotOnGeodesicSphere(f64),
    #[error("curve is too coarsely sampled (consecutive fidelity {0})")]
    CurveTooCoarse(f64),
    #[error("no feasible point found")]
    InfeasibleSearch,
    #[error("point violates the constraints (residual {0:e})")]
    NotOnM(f64),
    #[error("radius {r} is infeasible for fidelity {delta}")]
    InfeasibleRadius { r: f64, delta: f64 },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed system file: {0}")]
    Parse(String),
    #[error("variation violates the endpoint constraint (change {0:e})")]
    InvalidVariation(f64),
}

pub type Result<T> = std::result::Result<T, QslError>;

pub(crate) fn check_fidelity(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(QslError::InvalidFidelity(delta))
    }
}
