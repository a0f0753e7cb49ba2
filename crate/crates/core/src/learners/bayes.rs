//! Naive Bayes: Gaussian likelihoods for numeric columns, Laplace-smoothed
//! Bernoulli likelihoods for 0/1 columns, maximum-likelihood class prior.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnModel {
    /// Per class (negative, positive): mean and variance.
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// Per class (negative, positive): P(x = 1).
    Bernoulli { p_one: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// (P(negative), P(positive)).
    pub prior: [f64; 2],
    pub columns: Vec<ColumnModel>,
}

impl NaiveBayes {
    pub fn fit(x: ArrayView2<f64>, y: &[bool], binary: &[bool], var_floor: f64) -> Self {
        let n = y.len() as f64;
        let counts = [
            y.iter().filter(|&&b| !b).count() as f64,
            y.iter().filter(|&&b| b).count() as f64,
        ];
        let columns = (0..x.ncols())
            .map(|j| {
                let col = x.column(j);
                if binary[j] {
                    let mut ones = [0.0; 2];
                    for (v, &yi) in col.iter().zip(y) {
                        if *v > 0.5 {
                            ones[yi as usize] += 1.0;
                        }
                    }
                    ColumnModel::Bernoulli {
                        p_one: [0, 1].map(|c| (ones[c] + 1.0) / (counts[c] + 2.0)),
                    }
                } else {
                    let mut sum = [0.0; 2];
                    for (v, &yi) in col.iter().zip(y) {
                        sum[yi as usize] += v;
                    }
                    let mean = [0, 1].map(|c| if counts[c] > 0.0 { sum[c] / counts[c] } else { 0.0 });
                    let mut ss = [0.0; 2];
                    for (v, &yi) in col.iter().zip(y) {
                        let d = v - mean[yi as usize];
                        ss[yi as usize] += d * d;
                    }
                    // The floor keeps constant within-class columns finite.
                    let var = [0, 1].map(|c| if counts[c] > 0.0 { (ss[c] / counts[c]).max(var_floor) } else { 1.0 });
                    ColumnModel::Gaussian { mean, var }
                }
            })
            .collect();
        NaiveBayes {
            prior: [counts[0] / n, counts[1] / n],
            columns,
        }
    }

    fn log_joint(&self, x: &[f64]) -> [f64; 2] {
        let mut lj = self.prior.map(f64::ln);
        for (col, &v) in self.columns.iter().zip(x) {
            for (c, acc) in lj.iter_mut().enumerate() {
                *acc += match col {
                    ColumnModel::Bernoulli { p_one } => {
                        if v > 0.5 {
                            p_one[c].ln()
                        } else {
                            (1.0 - p_one[c]).ln()
                        }
                    }
                    ColumnModel::Gaussian { mean, var } => {
                        let d = v - mean[c];
                        -0.5 * (2.0 * std::f64::consts::PI * var[c]).ln() - d * d / (2.0 * var[c])
                    }
                };
            }
        }
        lj
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let [neg, pos] = self.log_joint(x);
        if pos == f64::NEG_INFINITY {
            return 0.0;
        }
        if neg == f64::NEG_INFINITY {
            return 1.0;
        }
        super::sigmoid(pos - neg)
    }
}
