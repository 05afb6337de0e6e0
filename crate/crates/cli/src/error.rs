use qexp_core::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Parse(String),
    /// Message plus a dump of what failed verification.
    #[error("{message}")]
    Certificate { message: String, dump: Option<String> },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn certificate(message: impl Into<String>) -> Self {
        CliError::Certificate { message: message.into(), dump: None }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 0 success, 2 parse, 3 certificate, 4 budget, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                CoreError::Syntax { .. }
                | CoreError::UnknownVariable { .. }
                | CoreError::ZeroDenominatorLiteral { .. } => 2,
                CoreError::BudgetExceeded { .. } => 4,
                CoreError::CertificateMismatch(_)
                | CoreError::MalformedCell(_)
                | CoreError::NonConstantCell
                | CoreError::BoundVanished { .. } => 3,
                _ => 1,
            },
            CliError::Parse(_) => 2,
            CliError::Certificate { .. } => 3,
            CliError::Usage(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn dump(&self) -> Option<&str> {
        match self {
            CliError::Certificate { dump, .. } => dump.as_deref(),
            _ => None,
        }
    }
}
