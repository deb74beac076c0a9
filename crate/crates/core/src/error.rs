use std::path::PathBuf;

/// Errors produced anywhere in the intent KB pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric precondition was violated (zero vector, empty input, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{source_name}:{line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },

    #[error("missing artifact {path} (produced by stage `{stage}`)")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("config: {0}")]
    Config(String),

    #[error("fixture store has no recorded response for `{0}`")]
    NotRecorded(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// The innermost error beneath any stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True when the error stems from bad or missing input rather than a bug.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::MissingArtifact { .. }
            | Error::Config(_)
            | Error::NotRecorded(_)
            | Error::Io { .. }
            | Error::Json(_) => true,
            Error::Domain(_) => false,
            Error::Stage { source, .. } => source.is_input_error(),
        }
    }
}
