use std::path::PathBuf;

use serde_json::json;

use crate::config::ConfigErrors;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),

    #[error(transparent)]
    Model(#[from] memvol::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{} invariant check(s) failed", .0.len())]
    Verify(Vec<String>),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One JSON object for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let (kind, details): (&str, Vec<String>) = match self {
            Self::Config(e) => ("config", e.0.iter().map(ToString::to_string).collect()),
            Self::Model(_) => ("model", Vec::new()),
            Self::Io { .. } => ("io", Vec::new()),
            Self::Usage(_) => ("usage", Vec::new()),
            Self::Verify(failures) => ("verify", failures.clone()),
        };
        json!({ "error": kind, "message": self.to_string(), "details": details })
    }
}
