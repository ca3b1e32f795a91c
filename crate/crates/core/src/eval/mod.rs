//! Classification metrics, ROC analysis, the repeated-holdout protocol over the
//! embedding × architecture grid, and report export.

mod experiment;
mod metrics;
mod report;

pub use experiment::{
    experiment_grid, run_experiment, EmbeddingSpec, EvalConfig, ExperimentConfig, ExperimentOutcome, GridCell,
    GridCellOutcome, GridKind, GridOutcome, RunTrace, THRESHOLD,
};
pub use metrics::{confusion, metrics, roc_auc, ConfusionCounts, Metrics, RocCurve, RocPoint};
pub use report::{
    export_outcome, export_report, fingerprint, grid_to_json, loss_to_csv, read_report_json, render_grid,
    render_table, report_to_csv, report_to_json, roc_to_csv, EvalReport, ReportFormat, RunFailure, RunMetrics,
    Summary,
};
