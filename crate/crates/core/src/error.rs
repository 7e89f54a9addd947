use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("lookup error: unknown article `{0}`")]
    UnknownArticle(String),

    #[error("{routine} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
        residual: f64,
        /// Last iterate, kept for diagnostics.
        last: Vec<f64>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("perfect separation detected: {0}")]
    Separation(String),

    #[error("singular Hessian; collinear columns: {0:?}")]
    Singular(Vec<String>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("optimization failure: {0}")]
    Optimization(String),

    #[error("support error: transition {src} -> {trg} is not an edge of the graph")]
    Support { src: u32, trg: u32 },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("elicitation error: row {0} has zero total belief")]
    Elicitation(u32),

    #[error("undefined Gini coefficient: all values are zero")]
    UndefinedGini,

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        Error::Line {
            line,
            message: message.into(),
        }
    }
}
