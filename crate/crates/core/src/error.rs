use thiserror::Error;

/// Errors raised anywhere in the fitting and summarization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-numeric value {value:?} in column `{column}` at data row {row}")]
    NonNumeric { column: String, row: usize, value: String },

    #[error("missing value in column `{column}` at data row {row}")]
    MissingValue { column: String, row: usize },

    #[error("constant column collides with intercept: `{0}`")]
    ConstantColumn(String),

    #[error("rank-deficient design; offending columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("need more rows than columns (n = {n}, p = {p})")]
    TooFewRows { n: usize, p: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampler diverged: {0}")]
    Divergence(String),

    #[error("zero anchor loss at posterior draw {draw}")]
    ZeroAnchorLoss { draw: usize },

    #[error("acceptable family is empty: {0}")]
    EmptyFamily(String),

    #[error("search guard exceeded: p = {p} > {limit}")]
    SearchLimit { p: usize, limit: usize },
}

impl Error {
    /// Numerical failures, as opposed to bad input or usage.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence(_) | Error::ZeroAnchorLoss { .. } | Error::EmptyFamily(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
