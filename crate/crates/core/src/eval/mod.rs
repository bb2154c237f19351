//! Label-based macro metrics, the cross-validation harness and rank tests.

mod cv;
mod metrics;
mod ranks;

pub use cv::{
    fit_fold, run_cv, train_fold, CellReport, FoldModels, LabelOutcome, MethodConfig, MetricReport,
    Summary,
};
pub use metrics::{auc_label, f1_label, macro_average, ConfusionCounts};
pub use ranks::{
    average_ranks, finner_adjust, friedman, CdEntry, Comparison, FriedmanResult, RankTable,
};
