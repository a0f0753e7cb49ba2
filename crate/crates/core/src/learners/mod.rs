//! Classifier suite: logistic regression (batch and minibatch SGD), naive
//! Bayes, OneR, decision stump, gain-ratio tree, random forest, AdaBoost,
//! LogitBoost over univariate regressors, and the two-hidden-layer FNN.
//!
//! Every trained [`Model`] carries the [`Standardizer`] fitted on its own
//! training rows, so it can score raw feature rows (NaN = missing).

pub mod bayes;
pub mod boost;
pub mod fnn;
pub mod forest;
pub mod logistic;
pub mod rules;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Encoding, FeatureMatrix, Standardizer};

pub use fnn::{fnn_backprop, fnn_forward, FnnParams};
pub use logistic::{gradient_logistic, LogisticWeights};

/// Serialized model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Hard-label cut-off on the positive-class probability.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    SgdLogistic,
    NaiveBayes,
    Oner,
    Stump,
    Tree,
    RandomForest,
    Adaboost,
    LogitboostSimpleLogistic,
    DeepFnn,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::Logistic,
        Family::SgdLogistic,
        Family::NaiveBayes,
        Family::Oner,
        Family::Stump,
        Family::Tree,
        Family::RandomForest,
        Family::Adaboost,
        Family::LogitboostSimpleLogistic,
        Family::DeepFnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::SgdLogistic => "sgd_logistic",
            Family::NaiveBayes => "naive_bayes",
            Family::Oner => "oner",
            Family::Stump => "stump",
            Family::Tree => "tree",
            Family::RandomForest => "random_forest",
            Family::Adaboost => "adaboost",
            Family::LogitboostSimpleLogistic => "logitboost_simple_logistic",
            Family::DeepFnn => "deep_fnn",
        }
    }

    /// Learners fitted by gradient steps see z-scored numeric columns.
    pub fn standardizes_inputs(self) -> bool {
        matches!(self, Family::Logistic | Family::SgdLogistic | Family::DeepFnn)
    }

    /// Learners that cannot be fitted on a single-class training set.
    pub fn needs_both_classes(self) -> bool {
        matches!(
            self,
            Family::Logistic
                | Family::SgdLogistic
                | Family::DeepFnn
                | Family::Adaboost
                | Family::LogitboostSimpleLogistic
        )
    }

    pub fn default_hyperparameters(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Family::Logistic => &[
                ("ridge", 1e-8),
                ("learning_rate", 0.1),
                ("tolerance", 1e-6),
                ("max_iterations", 10_000.0),
            ],
            Family::SgdLogistic => &[
                ("ridge", 1e-8),
                ("learning_rate", 0.01),
                ("batch_size", 32.0),
                ("epochs", 50.0),
            ],
            Family::NaiveBayes => &[("variance_floor", 1e-9)],
            Family::Oner => &[("min_bucket", 6.0)],
            Family::Stump => &[],
            Family::Tree => &[("min_leaf", 2.0), ("max_depth", 25.0)],
            Family::RandomForest => &[
                ("n_trees", 100.0),
                // 0 = floor(sqrt(p))
                ("max_features", 0.0),
                ("min_leaf", 1.0),
                // 0 = unlimited
                ("max_depth", 0.0),
            ],
            Family::Adaboost => &[("rounds", 10.0)],
            Family::LogitboostSimpleLogistic => &[("rounds", 10.0)],
            Family::DeepFnn => &[
                ("learning_rate", 0.05),
                ("batch_size", 64.0),
                ("epochs", 300.0),
            ],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .or(match norm.as_str() {
                "sgd" => Some(Family::SgdLogistic),
                "simple_logistic" | "logitboost" => Some(Family::LogitboostSimpleLogistic),
                "fnn" => Some(Family::DeepFnn),
                "j48" | "c45" => Some(Family::Tree),
                _ => None,
            })
            .ok_or_else(|| Error::Validation(format!("unknown learner family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        LearnerSpec {
            family,
            hyperparameters: family.default_hyperparameters(),
            seed,
        }
    }

    /// Overrides one hyperparameter; unknown names are rejected.
    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        if !self.hyperparameters.contains_key(name) {
            return Err(Error::Validation(format!(
                "{} has no hyperparameter '{name}'",
                self.family
            )));
        }
        self.hyperparameters.insert(name.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let defaults = self.family.default_hyperparameters();
        for (k, v) in &self.hyperparameters {
            if !defaults.contains_key(k) {
                return Err(Error::Validation(format!("{} has no hyperparameter '{k}'", self.family)));
            }
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Validation(format!("{}: {k} must be a nonnegative number", self.family)));
            }
            let must_be_positive = matches!(
                k.as_str(),
                "learning_rate" | "batch_size" | "epochs" | "rounds" | "n_trees" | "min_leaf" | "min_bucket" | "max_iterations"
            );
            if must_be_positive && *v <= 0.0 {
                return Err(Error::Validation(format!("{}: {k} must be positive", self.family)));
            }
        }
        for k in defaults.keys() {
            if !self.hyperparameters.contains_key(k) {
                return Err(Error::Validation(format!("{}: missing hyperparameter '{k}'", self.family)));
            }
        }
        Ok(())
    }

    pub(crate) fn get(&self, name: &str) -> f64 {
        self.hyperparameters[name]
    }

    pub(crate) fn get_usize(&self, name: &str) -> usize {
        self.hyperparameters[name].round() as usize
    }
}

/// Fitted parameters, one variant per family shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticWeights),
    NaiveBayes(bayes::NaiveBayes),
    Oner(rules::OneRule),
    Stump(rules::Stump),
    Tree(tree::DecisionTree),
    Forest(forest::RandomForest),
    Adaboost(boost::AdaBoost),
    Logitboost(boost::LogitBoost),
    Fnn(FnnParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub spec: LearnerSpec,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub params: ModelParams,
}

impl Model {
    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Positive-class probability for one raw feature row (NaN = missing).
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::Contract(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        let missing: Vec<bool> = row.iter().map(|v| !v.is_finite()).collect();
        let x = self.standardizer.apply_row(row, &missing);
        Ok(self.score_prepared(&x))
    }

    /// `[P(negative), P(positive)]`.
    pub fn predict_distribution(&self, row: &[f64]) -> Result<[f64; 2]> {
        let p = self.predict_proba(row)?;
        Ok([1.0 - p, p])
    }

    pub fn predict(&self, row: &[f64]) -> Result<bool> {
        Ok(self.predict_proba(row)? >= DECISION_THRESHOLD)
    }

    /// Scores every row of a feature matrix, honouring its missing mask.
    pub fn predict_matrix(&self, data: &FeatureMatrix) -> Result<Vec<f64>> {
        if data.n_features() != self.n_features() {
            return Err(Error::Contract(format!(
                "matrix has {} features, model expects {}",
                data.n_features(),
                self.n_features()
            )));
        }
        let x = self.standardizer.apply(data.rows.view(), data.missing.view());
        Ok(self.score_prepared_matrix(x.view()))
    }

    fn score_prepared_matrix(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match &self.params {
            ModelParams::Fnn(p) => p.predict_proba_batch(x),
            _ => x
                .rows()
                .into_iter()
                .map(|r| self.score_prepared(r.as_slice().expect("standard layout")))
                .collect(),
        }
    }

    fn score_prepared(&self, x: &[f64]) -> f64 {
        let p = match &self.params {
            ModelParams::Logistic(w) => w.predict_proba(x),
            ModelParams::NaiveBayes(m) => m.predict_proba(x),
            ModelParams::Oner(m) => m.predict_proba(x),
            ModelParams::Stump(m) => m.predict_proba(x),
            ModelParams::Tree(m) => m.predict_proba(x),
            ModelParams::Forest(m) => m.predict_proba(x),
            ModelParams::Adaboost(m) => m.predict_proba(x),
            ModelParams::Logitboost(m) => m.predict_proba(x),
            ModelParams::Fnn(m) => m.predict_proba(x),
        };
        p.clamp(0.0, 1.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        model.spec.validate()?;
        Ok(model)
    }
}

/// Fits one learner on a feature matrix. Deterministic in (spec, data).
pub fn train(spec: &LearnerSpec, data: &FeatureMatrix) -> Result<Model> {
    spec.validate()?;
    let n = data.n_rows();
    if n == 0 || data.n_features() == 0 {
        return Err(Error::Degenerate("training set is empty".into()));
    }
    let positives = data.positives();
    if spec.family.needs_both_classes() && (positives == 0 || positives == n) {
        return Err(Error::Degenerate(format!(
            "{} needs both classes in the training set ({} of {} positive)",
            spec.family, positives, n
        )));
    }
    let scaled: Vec<bool> = if spec.family.standardizes_inputs() {
        data.schema.numeric_mask()
    } else {
        vec![false; data.n_features()]
    };
    let standardizer = Standardizer::fit(data.rows.view(), data.missing.view(), &scaled);
    let x: Array2<f64> = standardizer.apply(data.rows.view(), data.missing.view());
    let y = &data.labels;
    let binary: Vec<bool> = data
        .schema
        .features
        .iter()
        .map(|f| !matches!(f.encoding, Encoding::Numeric))
        .collect();

    let params = match spec.family {
        Family::Logistic => ModelParams::Logistic(logistic::fit_batch(
            x.view(),
            y,
            &logistic::BatchOptions {
                ridge: spec.get("ridge"),
                learning_rate: spec.get("learning_rate"),
                tolerance: spec.get("tolerance"),
                max_iterations: spec.get_usize("max_iterations"),
            },
        )),
        Family::SgdLogistic => ModelParams::Logistic(logistic::fit_sgd(
            x.view(),
            y,
            &logistic::SgdOptions {
                ridge: spec.get("ridge"),
                learning_rate: spec.get("learning_rate"),
                batch_size: spec.get_usize("batch_size"),
                epochs: spec.get_usize("epochs"),
                seed: spec.seed,
            },
        )),
        Family::NaiveBayes => ModelParams::NaiveBayes(bayes::NaiveBayes::fit(
            x.view(),
            y,
            &binary,
            spec.get("variance_floor"),
        )),
        Family::Oner => ModelParams::Oner(rules::OneRule::fit(x.view(), y, spec.get_usize("min_bucket"))),
        Family::Stump => {
            let w = vec![1.0; n];
            ModelParams::Stump(rules::Stump::fit(x.view(), y, &w))
        }
        Family::Tree => ModelParams::Tree(tree::DecisionTree::fit(
            x.view(),
            y,
            &tree::TreeOptions::c45(spec.get_usize("min_leaf"), spec.get_usize("max_depth")),
            None,
        )),
        Family::RandomForest => ModelParams::Forest(forest::RandomForest::fit(
            x.view(),
            y,
            &forest::ForestOptions {
                n_trees: spec.get_usize("n_trees"),
                max_features: spec.get_usize("max_features"),
                min_leaf: spec.get_usize("min_leaf"),
                max_depth: spec.get_usize("max_depth"),
                seed: spec.seed,
            },
        )),
        Family::Adaboost => ModelParams::Adaboost(boost::AdaBoost::fit(x.view(), y, spec.get_usize("rounds"))),
        Family::LogitboostSimpleLogistic => {
            ModelParams::Logitboost(boost::LogitBoost::fit(x.view(), y, spec.get_usize("rounds")))
        }
        Family::DeepFnn => ModelParams::Fnn(fnn::fit(
            x.view(),
            y,
            &fnn::FnnOptions {
                learning_rate: spec.get("learning_rate"),
                batch_size: spec.get_usize("batch_size"),
                epochs: spec.get_usize("epochs"),
                seed: spec.seed,
            },
        )),
    };
    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        feature_names: data.schema.names().map(String::from).collect(),
        standardizer,
        params,
    })
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary entropy (bits) of a (positive, negative) weight pair.
pub(crate) fn entropy(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for c in [pos, neg] {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}
