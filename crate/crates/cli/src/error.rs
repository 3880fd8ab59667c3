use std::path::PathBuf;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("missing reference scan for theta = {theta} deg, axis {axis}: {path}")]
    MissingReference {
        theta: f64,
        axis: String,
        path: PathBuf,
    },

    #[error("{0}")]
    Numerical(mzweak::Error),

    #[error("{0}")]
    Io(mzweak::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::MissingInput(_) | CliError::MissingReference { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<mzweak::Error> for CliError {
    fn from(e: mzweak::Error) -> Self {
        use mzweak::Error as E;
        match e {
            E::Io { .. } => CliError::Io(e),
            E::Format { .. } | E::SchemaVersion { .. } => CliError::MissingInput(e.to_string()),
            E::InvalidInput(m) => CliError::Config(m),
            E::ConflictingCouplers(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
