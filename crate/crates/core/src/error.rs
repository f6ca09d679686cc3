//! Error type shared by every stage of the estimation pipeline.

use thiserror::Error;

/// One offending input row, numbered from 1 (header excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    pub row: usize,
    pub message: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("invalid rows:\n{}", format_rows(.0))]
    InvalidRows(Vec<RowIssue>),

    #[error("empty input")]
    EmptyInput,

    #[error("dataset has no RCT rows (source = 1)")]
    NoTrialRows,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{k} folds requested but stratum (source={source_flag}, treat={treat}) has only {count} rows")]
    TooManyFolds {
        k: usize,
        source_flag: u8,
        treat: u8,
        count: usize,
    },

    #[error("treatment takes a single value within source stratum {0}; propensity is not estimable")]
    SingleArmStratum(u8),

    #[error("every row in the fitting subset is censored")]
    AllCensored,

    #[error("required subset is empty: {0}")]
    EmptySubset(String),

    #[error("degenerate residual treatment: every design column is zero")]
    DegenerateResidualTreatment,

    #[error("non-finite objective encountered")]
    NonFiniteObjective,

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("linear system is singular")]
    Singular,

    #[error("censoring calibration failed: {0}")]
    Calibration(String),

    #[error("bootstrap failed: {0}")]
    Bootstrap(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_rows(rows: &[RowIssue]) -> String {
    rows.iter()
        .map(|r| format!("  {r}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
