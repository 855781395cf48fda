//! Error classification for exit codes.
//!
//! 0 success, 1 usage/config error, 2 data error, 3 internal invariant
//! violation.

use graspcast_core::baseline::BaselineError;
use graspcast_core::dataset::DataError;
use graspcast_core::features::FeatureError;
use graspcast_core::mlp::MlpError;
use graspcast_core::pose::PoseError;
use graspcast_core::report::ReportError;
use graspcast_core::synth::SynthError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }
}

#[derive(Debug)]
pub struct CmdError {
    pub kind: ErrorKind,
    pub error: anyhow::Error,
}

impl CmdError {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ErrorKind::Data,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ErrorKind::Internal,
            error: error.into(),
        }
    }

    pub fn usage_msg(message: impl Into<String>) -> Self {
        Self::usage(anyhow::anyhow!(message.into()))
    }

    pub fn data_msg(message: impl Into<String>) -> Self {
        Self::data(anyhow::anyhow!(message.into()))
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

impl From<DataError> for CmdError {
    fn from(error: DataError) -> Self {
        Self::data(error)
    }
}

impl From<SynthError> for CmdError {
    fn from(error: SynthError) -> Self {
        Self::data(error)
    }
}

impl From<BaselineError> for CmdError {
    fn from(error: BaselineError) -> Self {
        Self::data(error)
    }
}

impl From<ReportError> for CmdError {
    fn from(error: ReportError) -> Self {
        Self::data(error)
    }
}

impl From<PoseError> for CmdError {
    fn from(error: PoseError) -> Self {
        Self::data(error)
    }
}

impl From<FeatureError> for CmdError {
    // Feature construction only fails when the pipeline wired mismatched
    // configs together.
    fn from(error: FeatureError) -> Self {
        Self::internal(error)
    }
}

impl From<MlpError> for CmdError {
    fn from(error: MlpError) -> Self {
        match &error {
            MlpError::Io { .. } | MlpError::BadModelFile { .. } => Self::data(error),
            _ => Self::internal(error),
        }
    }
}

/// IO on output artifacts is a data/environment problem.
pub fn io_data(path: &std::path::Path) -> impl Fn(std::io::Error) -> CmdError + '_ {
    move |source| CmdError::data(anyhow::anyhow!("{}: {source}", path.display()))
}
