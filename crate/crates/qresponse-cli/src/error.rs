use serde_json::json;
use thiserror::Error;

/// Failures of a CLI run, each with its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("numerical failure in {task}: {source}")]
    Numeric {
        task: String,
        #[source]
        source: qresponse::Error,
    },
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation { .. } => 3,
            CliError::Numeric { .. } | CliError::Io(_) => 4,
        }
    }

    /// One-line JSON record for standard error.
    pub fn record(&self) -> String {
        let kind = match self {
            CliError::Parse(_) => "ConfigParse",
            CliError::Validation { .. } => "ValidationError",
            CliError::Numeric { .. } => "NumericalFailure",
            CliError::Io(_) => "IoError",
        };
        let mut rec = json!({ "error": kind, "exit_code": self.exit_code(), "message": self.to_string() });
        match self {
            CliError::Validation { path, .. } => rec["path"] = json!(path),
            CliError::Numeric { task, source } => {
                rec["task"] = json!(task);
                rec["detail"] = json!(format!("{source:?}"));
            }
            _ => {}
        }
        rec.to_string()
    }
}

/// Tags engine errors with the task they came from.
pub fn numeric(task: &str) -> impl Fn(qresponse::Error) -> CliError + '_ {
    move |source| CliError::Numeric { task: task.to_string(), source }
}
