use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NarxError>;

#[derive(Debug, Error)]
pub enum NarxError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot parse {value:?} at row {row}, column {column:?} as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },

    #[error("label column {0} not found")]
    LabelColumn(String),

    #[error("data has {0} class(es); at least two are required")]
    TooFewClasses(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("candidate count overflows for n = {n}, l = {l}")]
    CountOverflow { n: usize, l: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("weighted normal system is singular after {iterations} iteration(s)")]
    SingularSystem { iterations: usize },

    #[error("fold {fold} has no training rows of class {class}")]
    FoldMissingClass { fold: usize, class: usize },

    #[error("class {class}: {source}")]
    ClassFit {
        class: usize,
        #[source]
        source: Box<NarxError>,
    },

    #[error("term {term} uses output lags but no labels were supplied")]
    LabelsUnavailable { term: String },

    #[error("every candidate term was rejected before a selection was made")]
    AllCandidatesRejected,
}
