use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subsystem index {index} out of range for {count} factors")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("invalid permutation of {0} factors")]
    InvalidPermutation(usize),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid tester: {0}")]
    InvalidTester(String),

    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid local model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no feasible parameter point: {0}")]
    Infeasible(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("scale guard: {0}")]
    ScaleGuard(String),
}
