use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset} (line {line})")]
    InvalidUtf8 { path: PathBuf, line: u64, offset: u64 },

    #[error("{path}: line {line}: expected 2 tab-separated columns, found {found}")]
    ColumnCount { path: PathBuf, line: u64, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown label {token:?}; expected one of CC, CS, CB, X, WL, NL, U")]
    UnknownLabel { token: String },

    #[error("label U is unresolved and cannot be coarsened or aggregated")]
    UnresolvedLabel,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("item mismatch at position {index}: {left:?} vs {right:?}")]
    IdMismatch { index: usize, left: String, right: String },

    #[error("correlation undefined: {0} series is constant")]
    ConstantSeries(&'static str),

    #[error("invalid language tag {input:?}: bad {component} subtag {subtag:?}")]
    InvalidTag {
        input: String,
        component: &'static str,
        subtag: String,
    },

    #[error("rules data line {line}: {message}")]
    Rules { line: usize, message: String },

    #[error("language {lang:?} has {chars} characters of training text, need at least {required}")]
    InsufficientData {
        lang: String,
        chars: usize,
        required: usize,
    },

    #[error("duplicate language {0:?}")]
    DuplicateLanguage(String),

    #[error("unknown language {0:?}")]
    UnknownLanguage(String),

    #[error("no annotation for item {0:?}")]
    MissingAnnotation(String),

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
