use serde::Serialize;

/// Errors split by exit code: input problems exit 1, internal failures exit 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }

    /// The machine-readable form printed to stderr on failure.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct ErrBody<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct ErrDoc<'a> {
            error: ErrBody<'a>,
        }
        serde_json::to_string(&ErrDoc {
            error: ErrBody {
                kind: self.kind(),
                message: self.to_string(),
            },
        })
        .unwrap_or_else(|_| r#"{"error":{"kind":"internal","message":"unserializable"}}"#.into())
    }
}

impl From<fairkm::Error> for CliError {
    fn from(e: fairkm::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
