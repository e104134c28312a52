use crate::config::Origin;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {origin}: {message}")]
    Config { origin: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("convergence check failed: {0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("result table: {0}")]
    Table(String),
}

impl CliError {
    pub fn config(origin: &Origin, message: String) -> Self {
        CliError::Config { origin: origin.to_string(), message }
    }

    /// 2 for configuration problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) | CliError::NotConverged(_) => 3,
            CliError::Io(_) | CliError::Table(_) => 1,
        }
    }
}

impl From<cpcorr_core::Error> for CliError {
    fn from(e: cpcorr_core::Error) -> Self {
        match e {
            cpcorr_core::Error::Settings(_) | cpcorr_core::Error::Profile(_) | cpcorr_core::Error::Resolution { .. } => {
                CliError::Config { origin: "<settings>".into(), message: e.to_string() }
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}
