use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::folds::stratified_folds;
use super::metrics::{Confusion, Metrics};
use super::roc::{auc, roc_curve, RocPoint};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::{train, LearnerSpec, DECISION_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_positives: usize,
    pub metrics: Metrics,
    /// None when the held-out fold has a single class.
    pub auc: Option<f64>,
    /// SHA-256 of the serialized fold model, standardizer included. It can
    /// only change when the fold's training rows change.
    pub model_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub auc_mean: f64,
    pub auc_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: LearnerSpec,
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    pub positives: usize,
    /// Pooled over all held-out predictions.
    pub metrics: Metrics,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub folds: Vec<FoldReport>,
    pub fold_summary: FoldSummary,
    /// Held-out positive-class probability per instance.
    pub scores: Vec<f64>,
    pub fold_of: Vec<usize>,
}

impl EvalReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified k-fold cross-validation. Every fold fits its own
/// standardizer and model on the other k−1 folds only; folds run in
/// parallel and are reassembled in fold order.
pub fn cross_validate(spec: &LearnerSpec, data: &FeatureMatrix, k: usize, seed: u64) -> Result<EvalReport> {
    let folds = stratified_folds(&data.labels, k, seed)?;
    let per_fold: Vec<(FoldReport, Vec<usize>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<_> {
            let train_idx = folds.train_indices(fold);
            let test_idx = folds.test_indices(fold);
            let model = train(spec, &data.select_rows(&train_idx))?;
            let test = data.select_rows(&test_idx);
            let scores = model.predict_matrix(&test)?;
            let mut c = Confusion::default();
            for (&s, &l) in scores.iter().zip(&test.labels) {
                c.add(l, s >= DECISION_THRESHOLD);
            }
            let digest = hex::encode(Sha256::digest(model.to_json()?.as_bytes()));
            let report = FoldReport {
                fold,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                test_positives: test.positives(),
                metrics: Metrics::from_confusion(c),
                auc: auc(&test.labels, &scores).ok(),
                model_digest: digest,
            };
            Ok((report, test_idx, scores))
        })
        .collect::<Result<_>>()?;

    let n = data.n_rows();
    let mut scores = vec![f64::NAN; n];
    let mut fold_reports = Vec::with_capacity(k);
    for (report, idx, s) in per_fold {
        for (i, v) in idx.into_iter().zip(s) {
            scores[i] = v;
        }
        fold_reports.push(report);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Contract("a held-out instance was not scored".into()));
    }
    let mut pooled = Confusion::default();
    for (&s, &l) in scores.iter().zip(&data.labels) {
        pooled.add(l, s >= DECISION_THRESHOLD);
    }
    let accs: Vec<f64> = fold_reports.iter().map(|f| f.metrics.accuracy).collect();
    let aucs: Vec<f64> = fold_reports.iter().filter_map(|f| f.auc).collect();
    let (accuracy_mean, accuracy_sd) = mean_sd(&accs);
    let (auc_mean, auc_sd) = mean_sd(&aucs);
    Ok(EvalReport {
        spec: spec.clone(),
        k,
        seed,
        n,
        positives: data.positives(),
        metrics: Metrics::from_confusion(pooled),
        auc: auc(&data.labels, &scores)?,
        roc: roc_curve(&data.labels, &scores)?,
        folds: fold_reports,
        fold_summary: FoldSummary {
            accuracy_mean,
            accuracy_sd,
            auc_mean,
            auc_sd,
        },
        scores,
        fold_of: folds.assignment,
    })
}
