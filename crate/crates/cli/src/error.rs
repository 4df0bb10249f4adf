use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] stlf_core::Error),
    #[error("unknown series {0:?}")]
    UnknownSeries(String),
    #[error("origin {origin} is inside the training data, which ends at {train_end}")]
    InSampleOrigin { origin: String, train_end: String },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model file version {found} is not supported (this build reads version {supported})")]
    Version { found: u16, supported: u16 },
    #[error("model file is truncated or corrupt (checksum mismatch)")]
    Checksum,
    #[error("model file payload is malformed: {0}")]
    Malformed(String),
    #[error("model was fitted on {expected:?}, not {got:?}")]
    ModelMismatch { expected: String, got: String },
    #[error("{failed} of {total} tasks failed")]
    PartialFailure { failed: usize, total: usize },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for configuration and argument errors, 2 when some benchmark tasks
    /// failed, 3 for everything fatal (I/O, corrupt files, unusable data).
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_)
            | CliError::UnknownSeries(_)
            | CliError::InSampleOrigin { .. }
            | CliError::ModelMismatch { .. } => 1,
            CliError::Core(stlf_core::Error::InvalidArgument(_)) => 1,
            CliError::PartialFailure { .. } => 2,
            _ => 3,
        }
    }
}
