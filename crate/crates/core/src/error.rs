use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("non-positive value {value} at row {row}")]
    NonPositive { row: usize, value: f64 },

    #[error("timestamp gap at row {row}: expected {expected}, found {found}")]
    Gap {
        row: usize,
        expected: String,
        found: String,
    },

    #[error("series too short: length {len} < 3×period ({min})")]
    TooShort { len: usize, min: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("model {model}: series of length {len} is too short (needs {needed})")]
    FitTooShort {
        model: String,
        len: usize,
        needed: usize,
    },

    #[error("model {model}: log transform requires positive values (index {index} is {value})")]
    LogNonPositive {
        model: String,
        index: usize,
        value: f64,
    },

    #[error("actual value is zero at index {0}; percentage errors are undefined")]
    ZeroActual(usize),

    #[error("median combining would materialize {count} triplets (cap {cap})")]
    CombineCap { count: usize, cap: usize },

    #[error("transaction database contains no items")]
    EmptyDatabase,

    #[error("item universe of {0} items is too large for exhaustive enumeration (max 20)")]
    UniverseTooLarge(usize),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
