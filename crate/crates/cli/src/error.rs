use resonance_core::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("contract violated in stage '{stage}': {message}")]
    Contract { stage: String, message: String },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: resonance_core::Error,
    },

    #[error("cannot write '{path}': {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Contract { .. } => 2,
            CliError::Config(_) | CliError::Output { .. } => 3,
            CliError::Stage { source, .. } => match source.class() {
                ErrorClass::Contract => 2,
                ErrorClass::Config => 3,
                ErrorClass::NonConvergence => 4,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub trait StageContext<T> {
    fn stage(self, name: &str) -> CliResult<T>;
}

impl<T> StageContext<T> for resonance_core::Result<T> {
    fn stage(self, name: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Stage { stage: name.to_string(), source })
    }
}
