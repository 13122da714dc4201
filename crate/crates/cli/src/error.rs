use cns_core::error::CnsError;

/// Failure of one CLI phase. The exit code is derived from the cause.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: CnsError,
    },
    #[error("usage: {0}")]
    Usage(String),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_CONFIG,
            CliError::Phase { source, .. } => match source {
                CnsError::Config(_)
                | CnsError::MissingKey(_)
                | CnsError::InvalidParams(_)
                | CnsError::InvalidGrid(_) => EXIT_CONFIG,
                CnsError::Io { .. } | CnsError::Format { .. } => EXIT_IO,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

/// Attach a phase name to core results.
pub trait InPhase<T> {
    fn phase(self, phase: &'static str) -> Result<T, CliError>;
}

impl<T> InPhase<T> for Result<T, CnsError> {
    fn phase(self, phase: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Phase { phase, source })
    }
}
