use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested physics is outside the regime the method covers.
    #[error("refused: {0}")]
    Regime(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Json(_) => 2,
            CliError::Regime(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<gfock::Error> for CliError {
    fn from(err: gfock::Error) -> Self {
        use gfock::Error as E;
        let msg = err.to_string();
        match err {
            E::InvalidConfig(m) | E::InvalidArgument(m) => CliError::Config(m),
            E::ClosedFormInapplicable(m) => CliError::Regime(m),
            E::DoubletNotResolved { .. } => CliError::Regime(msg),
            E::InvariantViolation(m) => CliError::Invariant(m),
            E::NoConvergence { .. } => CliError::Invariant(msg),
        }
    }
}
