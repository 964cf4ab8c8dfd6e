use std::process::ExitCode;

use hedge_core::HedgeError;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_JUDGE: u8 = 3;
pub const EXIT_DEGENERATE: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] HedgeError),
    #[error("{0}")]
    Usage(String),
    #[error("dataset failed validation: {0}")]
    Validation(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                HedgeError::JudgeUnavailable(_) | HedgeError::Protocol(_) | HedgeError::DimensionMismatch { .. } => {
                    EXIT_JUDGE
                }
                HedgeError::DegenerateLabels => EXIT_DEGENERATE,
                _ => EXIT_VALIDATION,
            },
            CliError::Usage(_) | CliError::Validation(_) | CliError::Csv(_) | CliError::Io(_) => EXIT_VALIDATION,
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
