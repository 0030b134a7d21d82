use std::fmt;

use sagnac_core::Error as CoreError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Numerical,
    Threshold,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, message: message.into() }
    }

    pub fn threshold(message: impl Into<String>) -> Self {
        Self { kind: Kind::Threshold, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Config => 2,
            Kind::Numerical => 3,
            Kind::Threshold => 4,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Config => "config",
            Kind::Numerical => "numerical",
            Kind::Threshold => "threshold",
        }
    }

    /// Single-line JSON for machine consumers.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind_name(),
            "message": self.message,
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind_name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match e.root() {
            CoreError::Invalid(_) | CoreError::Domain(_) => Kind::Config,
            _ => Kind::Numerical,
        };
        Self { kind, message: e.to_string() }
    }
}
