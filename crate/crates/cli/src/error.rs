use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration ({} problems)", .0.len())]
    Invalid(Vec<String>),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] slipcurrent_core::Error),
    #[error("cannot serialize {what}: {msg}")]
    Serialize { what: &'static str, msg: String },
}

impl CliError {
    /// Machine-readable failure list.
    pub fn failures(&self) -> Vec<String> {
        match self {
            CliError::Invalid(v) => v.clone(),
            CliError::Core(slipcurrent_core::Error::Scenario(v)) => v.clone(),
            e => vec![e.to_string()],
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Usage(_) | CliError::Read { .. } => 2,
            CliError::Core(slipcurrent_core::Error::Scenario(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
