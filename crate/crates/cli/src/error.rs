use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{failed} acceptance criteria failed")]
    Verify { failed: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Lib(#[from] twincity::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use twincity::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(
                E::Config { .. }
                | E::Json(_)
                | E::InvalidStage { .. }
                | E::StageOutOfRange { .. }
                | E::TooLarge { .. }
                | E::Precondition(_)
                | E::UndersizedSample { .. }
                | E::EmptySegment { .. },
            ) => 2,
            _ => 1,
        }
    }
}
