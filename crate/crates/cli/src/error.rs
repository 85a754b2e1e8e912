use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Estimator(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Estimator(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Estimator(_) => "estimator",
        }
    }

    /// One JSON object for standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<homodyne_lhv::Error> for CliError {
    fn from(e: homodyne_lhv::Error) -> Self {
        use homodyne_lhv::Error as E;
        match e {
            E::UndefinedEstimator(_) | E::UndefinedVisibility(_) => CliError::Estimator(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
