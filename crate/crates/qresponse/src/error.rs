use thiserror::Error;

/// Errors raised by the engine. Every variant carries enough context to be
/// reported as a machine-readable record.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not hermitian: max deviation {deviation:e}")]
    NonHermitianInput { deviation: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },
    #[error("function undefined at eigenvalue {value}")]
    DomainError { value: f64 },
    #[error("unknown function tag `{0}`")]
    UnknownFunctionTag(String),
    #[error("negative weight {value:e} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("Hilbert-space dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("number operator does not commute with the Hamiltonian: |[H,N]| = {norm:e}")]
    NonCommutingNumber { norm: f64 },
    #[error("coupling table of order {order} is missing")]
    MissingCouplingTable { order: usize },
    #[error("thermodynamic Jacobian is singular: {0}")]
    SingularJacobian(String),
    #[error("step too coarse: doubling resolution moved a sample by {deviation:e} > {tolerance:e}")]
    StepTooCoarse { deviation: f64, tolerance: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("system is not time-reversal symmetric: {0}")]
    NotTimeReversalSymmetric(String),
    #[error("values do not decay at the grid edges: edge/max = {ratio:e}")]
    EdgeLeakage { ratio: f64 },
    #[error("frequency grid is not uniform and symmetric about zero")]
    NonUniformGrid,
    #[error("spectral evaluation requested on the real axis")]
    OnRealAxis,
    #[error("damping ratio {zeta} >= 1 is not supported")]
    OverdampedUnsupported { zeta: f64 },
    #[error("denominator vanishes at the requested point")]
    PoleHit,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
