use std::path::PathBuf;

/// Failures while reading or writing a model file.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// Wrong magic bytes (`version` is then `None`) or an unknown format
    /// version.
    #[error("unsupported model format: magic {magic:02x?}, version {version:?}")]
    Version { magic: [u8; 4], version: Option<u16> },
    #[error("model file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("tensor {name}: stored shape {stored:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        stored: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("tensor {0} missing from model file")]
    MissingTensor(String),
    #[error("unexpected tensor {0} in model file")]
    UnexpectedTensor(String),
    #[error("bad architecture descriptor: {0}")]
    Descriptor(String),
    #[error("expected a {expected} model, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("{0} trailing bytes after last tensor")]
    TrailingBytes(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] diaclid_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Annotation { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Image { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("{0}")]
    Data(String),
}

impl From<diaclid_core::nn::NnError> for Error {
    fn from(e: diaclid_core::nn::NnError) -> Self {
        Error::Core(e.into())
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
