use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    /// An upstream artifact is missing or was produced from another configuration.
    #[error("dependency error in stage `{stage}`: {message}")]
    Dependency { stage: &'static str, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: sgmor::Error,
    },

    #[error("io error in stage `{stage}`: {message}")]
    Io { stage: &'static str, message: String },
}

impl CliError {
    pub fn stage(stage: &'static str, source: sgmor::Error) -> Self {
        CliError::Stage { stage, source }
    }

    pub fn io(stage: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            stage,
            message: err.to_string(),
        }
    }

    pub fn dependency(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Dependency {
            stage,
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration, 3 for dependency, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dependency { .. } => 3,
            _ => 1,
        }
    }
}
