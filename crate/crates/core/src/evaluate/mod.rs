//! Stratified k-fold cross-validation, confusion metrics, ROC and AUC.

mod cv;
mod folds;
mod metrics;
mod roc;

pub use cv::{cross_validate, EvalReport, FoldReport, FoldSummary};
pub use folds::{stratified_folds, FoldAssignment};
pub use metrics::{confusion_metrics, Confusion, Metrics};
pub use roc::{auc, auc_pair_count, roc_curve, write_roc_csv, write_roc_svg, RocPoint};
