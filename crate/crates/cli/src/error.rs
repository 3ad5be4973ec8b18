use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// A library failure during `stage`. Exit code 3 when the parameters are
    /// infeasible for the data, 2 otherwise.
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: gsmote::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core { source, .. } if source.is_infeasible() => 3,
            _ => 2,
        }
    }
}

pub(crate) trait At<T> {
    fn at(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> At<T> for gsmote::Result<T> {
    fn at(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { stage, source })
    }
}
