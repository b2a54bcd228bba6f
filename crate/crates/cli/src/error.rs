use std::path::PathBuf;

use wassdrl_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, detail: impl ToString) -> Self {
        CliError::Parse { path: path.into(), detail: detail.to_string() }
    }

    /// 0 success, 2 usage/IO, 3 solver failure, 4 unsupported configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } | CliError::InsufficientData(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Infeasible
                | CoreError::Unbounded
                | CoreError::MaxIterations(_)
                | CoreError::Numerical(_)
                | CoreError::DivergenceDetected { .. }
                | CoreError::IndefiniteBeyondTolerance(_)
                | CoreError::InfeasibleSupport
                | CoreError::NoSlaterPoint => 3,
                CoreError::NotPwl
                | CoreError::UnsupportedNorm(_)
                | CoreError::BoundedSupportUnsupported
                | CoreError::Unsupported(_)
                | CoreError::KappaInfinite
                | CoreError::UnsupportedDimension(_)
                | CoreError::SampleSizeTooSmall { .. }
                | CoreError::RadiusViolation { .. }
                | CoreError::GammaOutOfRange(_) => 4,
                _ => 2,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
