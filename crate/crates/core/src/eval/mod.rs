//! Metrics, learning curves, hyperparameter search and reports.

pub mod curve;
pub mod metrics;
pub mod report;
pub mod search;

pub use curve::{partition_learning_curve, partition_sizes, CurveRun, LearningCurve, DEFAULT_PARTS};
pub use metrics::{extract_spans, oov_accuracy, span_f1, token_accuracy, Span, SpanScores};
pub use report::{Domain, EvalReport, ReportRow};
pub use search::{
    apply_params, random_search, two_stage_updating_search, updating_grid, Dimension, LeaderboardRow, Params,
    SearchResult, SearchSpace,
};
