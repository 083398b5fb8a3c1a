use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("csv parse error: {0}")]
    Csv(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("invalid label {value:?} at row {row}")]
    InvalidLabel { row: usize, value: String },

    #[error("non-numeric value {value:?} in column {column:?} at row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("empty file")]
    EmptyFile,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown topic {0:?}")]
    UnknownTopic(String),

    #[error("grouped CV impossible: {0}")]
    GroupedCvImpossible(String),

    #[error("single-class data: {0}")]
    SingleClass(String),

    #[error("too few minority samples: minority size {minority} <= k {k}")]
    TooFewMinority { minority: usize, k: usize },

    #[error("ADASYN undefined: classes fully separated")]
    AdasynUndefined,

    #[error("no minority-dense cluster")]
    NoMinorityCluster,

    #[error("ENN removed a class")]
    EnnRemovedClass,

    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("AUC undefined: {0}")]
    AucUndefined(String),

    #[error("infeasible AUC target: {0}")]
    InfeasibleTarget(String),

    #[error("invalid technique: {0}")]
    InvalidTechnique(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing baseline for model {0}")]
    MissingBaseline(String),
}

pub type Result<T> = std::result::Result<T, Error>;
