use alloc::string::String;

use crate::norm::NormP;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("row {row}: label {value} is not +1 or -1")]
    LabelError { row: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("loss is not piecewise linear")]
    NotPwl,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("support set is empty")]
    InfeasibleSupport,
    #[error("support set has no strictly feasible (Slater) point")]
    NoSlaterPoint,
    #[error("norm {0} is not supported here (dual-norm constraints would not be linear)")]
    UnsupportedNorm(NormP),
    #[error("this route requires an unbounded support set")]
    BoundedSupportUnsupported,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("gamma {0} outside the admissible range")]
    GammaOutOfRange(f64),
    #[error("label-flip cost must be finite for this construction")]
    KappaInfinite,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix has eigenvalue {0} below the PSD tolerance")]
    IndefiniteBeyondTolerance(f64),
    #[error("input norm {norm} exceeds the polynomial-kernel radius {radius}")]
    RadiusViolation { norm: f64, radius: f64 },
    #[error("input dimension {0} is not supported by this radius formula")]
    UnsupportedDimension(usize),
    #[error("sample size too small: at least {required} samples are needed")]
    SampleSizeTooSmall { required: f64 },
    #[error("training diverged at epoch {epoch}")]
    DivergenceDetected { epoch: usize },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    MaxIterations(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
