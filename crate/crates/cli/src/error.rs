use std::fmt;
use std::path::Path;

use gsa_core::GsaError;
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config {
        message: String,
        line: Option<usize>,
        field: Option<String>,
    },
    Io {
        path: String,
        message: String,
    },
    Design {
        message: String,
        row: Option<usize>,
        column: Option<String>,
    },
    Core(GsaError),
}

impl CliError {
    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            line: None,
            field: Some(field.to_string()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Design { .. } => "design",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "message": self.to_string() });
        let extra = match self {
            CliError::Config { line, field, .. } => json!({ "line": line, "field": field }),
            CliError::Io { path, .. } => json!({ "path": path }),
            CliError::Design { row, column, .. } => json!({ "row": row, "column": column }),
            CliError::Core(GsaError::Simulator { input, .. }) => json!({ "input": input }),
            _ => json!({}),
        };
        if let (Some(b), Some(e)) = (body.as_object_mut(), extra.as_object()) {
            b.extend(
                e.iter()
                    .filter(|(_, v)| !v.is_null())
                    .map(|(k, v)| (k.clone(), v.clone())),
            );
        }
        json!({ "error": body })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config { message, line, field } => {
                write!(f, "config error")?;
                if let Some(l) = line {
                    write!(f, " at line {l}")?;
                }
                if let Some(k) = field {
                    write!(f, " in field '{k}'")?;
                }
                write!(f, ": {message}")
            }
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Design { message, .. } => write!(f, "design error: {message}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GsaError> for CliError {
    fn from(e: GsaError) -> Self {
        CliError::Core(e)
    }
}
