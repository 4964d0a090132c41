use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("label map contains no positive instance ids")]
    EmptyMap,
    #[error("malformed label map: {0}")]
    MalformedMap(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("degenerate contour: {0}")]
    DegenerateContour(String),
    #[error("contour is not normalized: {0}")]
    NotNormalized(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rasterized mask is empty")]
    EmptyMask,
    #[error("signal too short: need at least {min} values, got {len}")]
    TooShort { len: usize, min: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid shape parameters: {0}")]
    InvalidParams(String),
    #[error("label {0} is outside the class range 0..=4")]
    LabelOutOfRange(i64),
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("model was trained for family `{model}` but `{requested}` was requested")]
    ModelFamilyMismatch { model: String, requested: String },
    #[error("unknown feature family `{0}`")]
    UnknownFamily(String),
    #[error("every hyperparameter trial failed; last error: {0}")]
    AllTrialsFailed(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 3 for degenerate data, 2 for any other
    /// input problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateContour(_)
            | Error::EmptyMask
            | Error::InsufficientData(_)
            | Error::TooFewSamples(_)
            | Error::AllTrialsFailed(_) => 3,
            _ => 2,
        }
    }
}
