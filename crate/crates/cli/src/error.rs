use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration; `path` locates the offending field.
    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config_at(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        CliError::Config {
            path: if path.is_empty() { ".".into() } else { path },
            message: message.into(),
        }
    }

    pub fn prefixed(self, prefix: &str) -> Self {
        match self {
            CliError::Config { path, message } => CliError::Config {
                path: format!("{prefix}.{path}"),
                message,
            },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, path) = match self {
            CliError::Config { path, .. } => ("config", Some(path.clone())),
            CliError::Runtime(_) => ("runtime", None),
        };
        ErrorReport {
            schema_version: crate::output::REPORT_SCHEMA_VERSION,
            status: "error",
            kind,
            path,
            message: self.to_string(),
        }
    }
}

impl From<rdblow::Error> for CliError {
    fn from(e: rdblow::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub status: &'static str,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}
