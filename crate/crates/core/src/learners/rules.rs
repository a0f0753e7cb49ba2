//! Single-feature learners: OneR and the weighted decision stump.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::entropy;

/// A one-attribute rule: ascending breakpoints split the attribute into
/// buckets (`x <= breaks[0]`, ..., `x > breaks[last]`), each with a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneRule {
    pub feature: usize,
    pub breaks: Vec<f64>,
    pub classes: Vec<bool>,
    pub training_errors: usize,
}

impl OneRule {
    /// Builds one rule per column and keeps the one with the fewest training
    /// errors (ties: lowest column index).
    pub fn fit(x: ArrayView2<f64>, y: &[bool], min_bucket: usize) -> Self {
        let mut best: Option<OneRule> = None;
        for j in 0..x.ncols() {
            let rule = rule_for_column(j, x.column(j), y, min_bucket);
            if best.as_ref().is_none_or(|b| rule.training_errors < b.training_errors) {
                best = Some(rule);
            }
        }
        best.expect("at least one column")
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        let bucket = self.breaks.partition_point(|b| *b < x[self.feature]);
        self.classes[bucket]
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if self.predict(x) { 1.0 } else { 0.0 }
    }
}

fn majority(counts: [usize; 2]) -> bool {
    counts[1] > counts[0]
}

fn rule_for_column(feature: usize, col: ArrayView1<f64>, y: &[bool], min_bucket: usize) -> OneRule {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let value = |k: usize| col[order[k]];
    let class = |k: usize| y[order[k]];

    // 0/1 indicator columns are nominal: one bucket per value.
    let indicator = col.iter().all(|v| *v == 0.0 || *v == 1.0);

    let n = order.len();
    let mut buckets: Vec<(f64, [usize; 2])> = Vec::new(); // (upper break, counts)
    let mut k = 0;
    while k < n {
        let mut counts = [0usize; 2];
        if indicator {
            let v = value(k);
            while k < n && value(k) == v {
                counts[class(k) as usize] += 1;
                k += 1;
            }
        } else {
            // Grow until some class reaches the minimum bucket size...
            while k < n && counts[0].max(counts[1]) < min_bucket {
                counts[class(k) as usize] += 1;
                k += 1;
            }
            // ...absorb following rows of the bucket's majority class...
            let maj = majority(counts);
            while k < n && class(k) == maj {
                counts[class(k) as usize] += 1;
                k += 1;
            }
            // ...and never split between equal values.
            while k < n && value(k) == value(k - 1) {
                counts[class(k) as usize] += 1;
                k += 1;
            }
        }
        let upper = if k < n { 0.5 * (value(k - 1) + value(k)) } else { f64::INFINITY };
        buckets.push((upper, counts));
    }

    // Merge neighbouring buckets that predict the same class.
    let mut merged: Vec<(f64, [usize; 2])> = Vec::new();
    for (upper, counts) in buckets {
        match merged.last_mut() {
            Some(last) if majority(last.1) == majority(counts) => {
                last.0 = upper;
                last.1[0] += counts[0];
                last.1[1] += counts[1];
            }
            _ => merged.push((upper, counts)),
        }
    }
    let training_errors = merged.iter().map(|(_, c)| c[0].min(c[1])).sum();
    let breaks = merged[..merged.len() - 1].iter().map(|(u, _)| *u).collect();
    let classes = merged.iter().map(|(_, c)| majority(*c)).collect();
    OneRule {
        feature,
        breaks,
        classes,
        training_errors,
    }
}

/// One-split tree chosen by weighted information gain; each side predicts
/// its weighted positive fraction. With no useful split it is a single leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: Option<usize>,
    pub threshold: f64,
    /// Positive fraction for `x <= threshold`, then for `x > threshold`.
    pub leaf_positive: [f64; 2],
}

impl Stump {
    pub fn fit(x: ArrayView2<f64>, y: &[bool], weights: &[f64]) -> Self {
        let total = weighted_counts(y, weights, 0..y.len());
        let root_h = entropy(total[1], total[0]);
        let total_w = total[0] + total[1];
        let root_fraction = if total_w > 0.0 { total[1] / total_w } else { 0.5 };
        let mut best = Stump {
            feature: None,
            threshold: f64::INFINITY,
            leaf_positive: [root_fraction, root_fraction],
        };
        let mut best_gain = 1e-12;
        let mut order: Vec<usize> = (0..y.len()).collect();
        for j in 0..x.ncols() {
            let col = x.column(j);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut left = [0.0f64; 2];
            for k in 0..order.len().saturating_sub(1) {
                let i = order[k];
                left[y[i] as usize] += weights[i];
                let (v, next) = (col[i], col[order[k + 1]]);
                if v == next {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let (wl, wr) = (left[0] + left[1], right[0] + right[1]);
                if wl <= 0.0 || wr <= 0.0 {
                    continue;
                }
                let gain = root_h - (wl * entropy(left[1], left[0]) + wr * entropy(right[1], right[0])) / total_w;
                if gain > best_gain {
                    best_gain = gain;
                    best = Stump {
                        feature: Some(j),
                        threshold: 0.5 * (v + next),
                        leaf_positive: [left[1] / wl, right[1] / wr],
                    };
                }
            }
        }
        best
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self.feature {
            Some(j) if x[j] > self.threshold => self.leaf_positive[1],
            _ => self.leaf_positive[0],
        }
    }

    /// Hard vote: the weighted majority of the leaf (ties negative).
    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) > 0.5
    }
}

fn weighted_counts(y: &[bool], w: &[f64], idx: impl Iterator<Item = usize>) -> [f64; 2] {
    let mut c = [0.0; 2];
    for i in idx {
        c[y[i] as usize] += w[i];
    }
    c
}
