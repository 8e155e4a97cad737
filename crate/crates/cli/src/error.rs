use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<dcwelfare::Error> for CliError {
    fn from(e: dcwelfare::Error) -> Self {
        use dcwelfare::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidInput(_) | E::InvalidAlternative { .. } => CliError::Usage(msg),
            E::Data(_) | E::NonMonotoneUtility { .. } => CliError::Data(msg),
            E::NonFinite(_)
            | E::QuadratureNonConvergence { .. }
            | E::TruncationTail { .. }
            | E::Bracket(_)
            | E::Singular(_)
            | E::Infeasible(_)
            | E::NonConvergence(_) => CliError::Numerical(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
