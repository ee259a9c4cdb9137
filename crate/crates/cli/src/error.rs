use pinn_tableau::TableauError;

/// Failures of a CLI command, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid or inconsistent configuration (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// Non-finite values, blow-up or failed convergence (exit 3).
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<pinn_core::Error> for CliError {
    fn from(e: pinn_core::Error) -> Self {
        use pinn_core::Error as E;
        match e {
            E::Argument(m) => CliError::Config(m),
            E::Numerical(m) => CliError::Numerical(m),
            E::Tableau(t) => t.into(),
            E::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<TableauError> for CliError {
    fn from(e: TableauError) -> Self {
        match e {
            TableauError::Argument(m) => CliError::Config(m),
            TableauError::Numerical(m) => CliError::Numerical(m),
            TableauError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
