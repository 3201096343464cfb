use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("invalid {what}: {detail}")]
    Validation { what: String, detail: String },
    #[error("{0}")]
    Core(#[from] nsp_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(what: impl Into<String>, detail: impl Into<String>) -> Self {
        CliError::Validation {
            what: what.into(),
            detail: detail.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => "io",
            CliError::Parse { .. } => "parse",
            CliError::Validation { .. } => "invalid_config",
            CliError::Core(e) => e.code(),
        }
    }

    /// 1 for IO, 2 for validation, 3 for numerical blow-up.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nsp_core::Error::BlowUp { .. } | nsp_core::Error::StepRejected { .. }) => 3,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 1,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.code(), "message": self.to_string() });
        if let CliError::Core(nsp_core::Error::BlowUp { tau, retries, .. }) = self {
            v["tau"] = json!(tau);
            v["retries"] = json!(retries);
        }
        v
    }
}
