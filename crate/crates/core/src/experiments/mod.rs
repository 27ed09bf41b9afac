//! Repeated runs, significance testing and plot-ready exports.

use std::path::PathBuf;

use thiserror::Error;

use crate::frameworks::FrameworkError;
use crate::problems::ProblemError;
use crate::surrogate::SurrogateError;

pub mod campaign;
pub mod comparison;
pub mod report;
pub mod stats;
pub mod viz2d;

pub use campaign::{load_results, result_file_name, run_campaign, CampaignSummary, ExperimentConfig, OneOrMany};
pub use comparison::{build_comparison, Cell, ComparisonTable, Row, Tally};
pub use report::{mean_best_report, write_report, SummaryRow};
pub use stats::{median, wilcoxon_rank_sum, RankSumTest, Verdict};
pub use viz2d::{compute_viz2d, compute_viz2d_with, export_viz2d, Viz2d, Viz2dScores};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("rank-sum test needs at least 3 values per sample, got {a} and {b}")]
    SampleSize { a: usize, b: usize },
    #[error("statistics: {0}")]
    Stats(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("inconsistent results: {0}")]
    Shape(String),
    #[error(transparent)]
    Framework(#[from] FrameworkError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}
