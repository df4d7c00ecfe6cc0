use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero part at row {row}, column {col}; zeros must be replaced before analysis")]
    ZeroPart { row: usize, col: usize },

    #[error("negative or non-finite entry at row {row}, column {col}")]
    InvalidEntry { row: usize, col: usize },

    #[error("sign vector needs at least one +1 and one -1")]
    DegenerateSplit,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("requested {requested} components but only {achievable} are achievable")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("response has zero variance")]
    ConstantResponse,

    #[error("loading vector has entries of one sign only")]
    OneSidedLoading,

    #[error("subcomposition over parts {parts:?} is numerically constant")]
    DegenerateSubcomposition { parts: Vec<usize> },

    #[error("design with {n} samples cannot support {k} regressors plus intercept")]
    Collinear { n: usize, k: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("value {0} is not a 0/1 label")]
    NonBinary(f64),

    #[error("{n} samples are too few for {folds}-fold cross-validation")]
    TooFewSamples { n: usize, folds: usize },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
