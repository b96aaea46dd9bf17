use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Solve(#[from] plap_core::Error),

    #[error("every benchmark cell timed out")]
    AllTimedOut,

    #[error("no benchmark cell completed")]
    AllFailed,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Format { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Solve(e) => e.category(),
            CliError::AllTimedOut => "timeout",
            CliError::AllFailed => "numerical",
        }
    }

    /// 0 ok, 2 configuration, 3 numerical failure, 4 every bench cell timed out.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AllTimedOut => 4,
            CliError::Solve(plap_core::Error::Interrupted) => 4,
            CliError::Solve(plap_core::Error::InvalidConfig(_) | plap_core::Error::UnboundedBelow { .. }) => 2,
            CliError::Solve(_) | CliError::AllFailed => 3,
            CliError::Config(_) | CliError::Format { .. } | CliError::Io { .. } => 2,
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Payload {
            error: self.category(),
            message: self.to_string(),
        })
        .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.category()))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
