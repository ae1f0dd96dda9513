//! Statistics over survey responses and session logs: two-sample
//! Kolmogorov-Smirnov tests with Benjamini-Hochberg adjustment, Kendall
//! rank correlation with Holm adjustment, and descriptive contrast tables
//! of the normalized perceptual attributes.
//!
//! The scope is deliberately descriptive — no mixed-effects models. Every
//! function here is pure.

mod contrast;
mod stats;
mod survey;

pub use contrast::{
    contrast_table, correlation_matrix, write_long_csv, AttributeStat, CellStat, ContrastTable,
    CorrelationMatrix,
};
pub use stats::{bh_adjust, holm_adjust, kendall_tau_b, ks_two_sample};
pub use survey::{read_survey, Attribute, Condition, Site, SurveyRecord};

use thiserror::Error;

use crate::perception::PerceptionError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("sample is empty")]
    EmptySample,
    #[error("samples must be the same length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("value at index {0} is not finite")]
    NonFinite(usize),
    #[error("all values are tied in one argument, rank correlation undefined")]
    Degenerate,
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("survey is missing column '{0}'")]
    MissingColumn(String),
    #[error("survey row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
