use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value {value} at row {row}")]
    Numerical { row: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot split {n} rows into {k} equal shards")]
    ShardSize { n: usize, k: usize },

    #[error("target is -inf or NaN at the initial point")]
    Initialization,

    #[error("chain stuck: no acceptance in {window} consecutive iterations (iteration {iteration})")]
    StuckChain { window: usize, iteration: usize },

    #[error("degenerate conditional: {0}")]
    DegenerateConditional(String),

    #[error("singular Hessian (condition estimate {condition:e})")]
    SingularHessian { condition: f64 },

    #[error("Newton step produced a non-finite iterate")]
    NonFiniteStep,

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("Fisher information is singular")]
    SingularInformation,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("negative KL divergence {0}")]
    NegativeKl(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("unknown example '{0}'")]
    UnknownExample(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient rows: requested {requested}, file has {available}")]
    InsufficientRows { requested: usize, available: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{} shard(s) failed: {}", .0.len(), format_shard_failures(.0))]
    ShardFailures(Vec<(usize, Error)>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_shard_failures(failures: &[(usize, Error)]) -> String {
    failures
        .iter()
        .map(|(i, e)| format!("[shard {i}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
