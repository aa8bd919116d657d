use std::path::PathBuf;

/// Error type shared by every stage of the toolkit.
///
/// Per-item problems (a snippet that fails validation, a render that times
/// out) are recorded as data in the stage output, not raised through here.
/// `Error` is reserved for conditions that stop a stage outright.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A stage needs an artifact a prior stage should have produced.
    #[error("missing {path}: run the `{stage}` stage first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("{0}")]
    Config(String),

    /// Cross-artifact consistency problem, e.g. a prediction whose sample id
    /// does not appear in the manifest it is scored against.
    #[error("{0}")]
    Integrity(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
