use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: shadowlab_core::Error,
    },
    #[error("scenario mismatch: {0}")]
    Mismatch(String),
    #[error("unreadable report: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// 2 for bad input, 3 for numerical failure, 1 for filesystem errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation(_) | LabError::Mismatch(_) | LabError::Report(_) => 2,
            LabError::Stage { .. } => 3,
            LabError::Io(_) => 1,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, LabError>;
}

impl<T> StageExt<T> for shadowlab_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Stage { stage, source })
    }
}
