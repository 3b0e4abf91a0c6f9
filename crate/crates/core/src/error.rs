use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NonHermitianInput(f64),
    #[error("eigensolver did not converge within its iteration budget")]
    EigensolverFailure,
    #[error("spectral profile evaluated at {0} outside its domain")]
    DomainError(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix exponential failed: {0}")]
    ExpmFailure(&'static str),
    #[error("superoperator kernel has dimension {0} (generator is not mixing)")]
    DegenerateKernel(usize),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),
    #[error("state drift {0:e} after evolution exceeds tolerance")]
    DriftExceeded(f64),
    #[error("model size exceeds desk-scale limit: {0}")]
    SizeExceeded(&'static str),
    #[error("2^{precision_bits} estimates exceed Hilbert-space dimension 2^{qubits}")]
    PrecisionExceedsDimension { precision_bits: u32, qubits: u32 },
    #[error("eigenvalue resampling budget exhausted")]
    ResamplingBudgetExceeded,
    #[error("n + r = {0} exceeds the supported range")]
    ParameterOverflow(u32),
    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("interval of width {width:e} vanishes under margin {margin:e}")]
    IntervalVanishes { width: f64, margin: f64 },
    #[error("invalid rounding promise: {0}")]
    InvalidPromise(&'static str),
    #[error("polynomial degree budget {0} exceeded")]
    DegreeBudgetExceeded(usize),
    #[error("labeled intervals closer than the required separation")]
    IntervalsTooClose,
    #[error("{intervals} intervals do not fit in the available label bits")]
    TooManyIntervals { intervals: usize },
    #[error("generator is not mixing")]
    NotMixing,
    #[error("jump enumerations of the two generators differ")]
    EnumerationMismatch,
    #[error("promised subspace is empty")]
    EmptyPromisedSubspace,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
