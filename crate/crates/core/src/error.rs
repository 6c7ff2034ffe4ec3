use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- ingestion / dataset ----
    #[error("target column `{0}` not found in header")]
    MissingTargetColumn(String),
    #[error("target column must have exactly two distinct labels, found {0}")]
    NotBinaryTarget(usize),
    #[error("positive label `{0}` does not occur in the target column")]
    UnknownPositiveLabel(String),
    #[error("positive label `{label}` is the majority class ({count} of {total} rows)")]
    PositiveIsMajority {
        label: String,
        count: usize,
        total: usize,
    },
    #[error("no rows left after dropping {dropped} rows with missing values")]
    EmptyAfterCleaning { dropped: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("class too small: {0}")]
    ClassTooSmall(String),
    #[error("proportion {p_target} is unreachable: {reason}")]
    UnreachableProportion { p_target: f64, reason: String },
    #[error("minority proportion {0} is above 0.4; the data is not imbalanced")]
    NotImbalanced(f64),
    #[error("grid size must be an even number >= 6, got {0}")]
    BadN(usize),
    #[error("proportion grid is degenerate for p_d = {0}")]
    DegenerateGrid(f64),

    // ---- metrics ----
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("curve metric needs both classes present")]
    OneClassOnly,
    #[error("precision-recall curve needs at least one positive")]
    NoPositives,
    #[error("score {0} is not a probability")]
    InvalidScore(f64),

    // ---- learners ----
    #[error("logistic fit cannot progress: {0}")]
    SingularFit(String),
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("feature width mismatch: model expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("empty hyperparameter grid")]
    EmptyGrid,

    // ---- resampling ----
    #[error("SMOTE needs at least two minority rows, got {0}")]
    TooFewMinority(usize),
    #[error("bad subsample counts: {0}")]
    BadCounts(String),

    // ---- ipip ----
    #[error("invalid IPIP configuration: {0}")]
    InvalidConfig(String),

    // ---- uic / stats ----
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("incomplete proportion grid: {0}")]
    IncompleteGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    // ---- concordance ----
    #[error("incomplete run records: {0}")]
    IncompleteRecords(String),

    // ---- persistence / io ----
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("I/O error on {path}: {source}")]
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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SingularFit(_) | Error::DegenerateData(_) | Error::Io { .. }
        )
    }
}
