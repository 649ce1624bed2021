use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed csv {path}: {reason}")]
    MalformedCsv { path: String, reason: String },
    #[error("duplicate cell for asset {asset} at {date}")]
    DuplicateCell { date: String, asset: String },
    #[error("panel is empty")]
    EmptyPanel,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-positive price for asset {asset} at row {row}")]
    NonPositivePrice { asset: String, row: usize },
    #[error("asset {asset} has a missing return inside its active range at row {row}")]
    InteriorGap { asset: String, row: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
    #[error("too few observations: need more than {needed}, have {have}")]
    TooFewObservations { needed: usize, have: usize },
    #[error("projection direction has zero norm")]
    ZeroDirection,
    #[error("restricted model is not nested in the full model")]
    NotNested,
    #[error("full model has zero residual sum of squares")]
    ZeroResidual,
    #[error("baseline forecast has zero squared error")]
    ZeroBaselineSse,

    #[error("coordinate descent did not converge after {sweeps} sweeps")]
    DidNotConverge { sweeps: usize },

    #[error("assets {a} and {b} share only {overlap} observed periods")]
    InsufficientOverlap { a: String, b: String, overlap: usize },
    #[error("series {0} has zero variance")]
    ZeroVariance(String),
    #[error("cluster is empty")]
    EmptyCluster,

    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),

    #[error("market index {0} not present in basis universe")]
    MissingMarketIndex(String),
    #[error("selection left {selected} regressors for {n} observations")]
    DegenerateAfterSelection { selected: usize, n: usize },
    #[error("entity {0} has no class or category")]
    UnclassifiedEntity(String),

    #[error("only {0} eligible assets in the volatility universe")]
    UniverseTooSmall(usize),
    #[error("return of -100% or worse at position {0}")]
    TotalLoss(usize),

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing input file {0}")]
    MissingInput(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl AsRef<std::path::Path>, reason: impl ToString) -> Self {
        Error::MalformedCsv {
            path: path.as_ref().display().to_string(),
            reason: reason.to_string(),
        }
    }
}
