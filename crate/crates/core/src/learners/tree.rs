//! Binary decision trees over numeric columns.
//!
//! Splits test `x[feature] <= threshold`, where the threshold is the largest
//! training value sent left. Because only the ordering of training values
//! matters, predictions are unchanged by any strictly increasing transform
//! applied to a column in both training and scoring.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::entropy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitCriterion {
    /// C4.5: among columns whose gain is at least the average, maximize
    /// gain / split information.
    GainRatio,
    InfoGain,
}

#[derive(Debug, Clone)]
pub struct TreeOptions {
    pub criterion: SplitCriterion,
    /// Minimum (weighted) instances on each side of a split.
    pub min_leaf: usize,
    /// 0 = unlimited.
    pub max_depth: usize,
    /// Columns sampled per node; 0 = all. Sampling needs an RNG.
    pub max_features: usize,
}

impl TreeOptions {
    pub fn c45(min_leaf: usize, max_depth: usize) -> Self {
        TreeOptions {
            criterion: SplitCriterion::GainRatio,
            min_leaf,
            max_depth,
            max_features: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        positive: f64,
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    split_info: f64,
}

impl DecisionTree {
    pub fn fit(x: ArrayView2<f64>, y: &[bool], opts: &TreeOptions, rng: Option<&mut ChaCha8Rng>) -> Self {
        Self::fit_weighted(x, y, &vec![1.0; y.len()], opts, rng)
    }

    /// Rows with zero weight are ignored; integer weights behave exactly like
    /// duplicated rows (used for bootstrap samples).
    pub fn fit_weighted(
        x: ArrayView2<f64>,
        y: &[bool],
        weights: &[f64],
        opts: &TreeOptions,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Self {
        let p = x.ncols();
        let min_leaf = opts.min_leaf.max(1) as f64;
        let root_rows: Vec<usize> = (0..y.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut nodes = vec![Node::Leaf {
            positive: 0.0,
            weight: 0.0,
        }];
        let mut stack = vec![(0usize, root_rows, 0usize)];
        let mut buf: Vec<(f64, usize)> = Vec::with_capacity(y.len());

        while let Some((slot, rows, depth)) = stack.pop() {
            let mut counts = [0.0f64; 2];
            for &i in &rows {
                counts[y[i] as usize] += weights[i];
            }
            let total = counts[0] + counts[1];
            let leaf = Node::Leaf {
                positive: if total > 0.0 { counts[1] / total } else { 0.5 },
                weight: total,
            };
            let pure = counts[0] == 0.0 || counts[1] == 0.0;
            let depth_capped = opts.max_depth > 0 && depth >= opts.max_depth;
            if pure || depth_capped || total < 2.0 * min_leaf {
                nodes[slot] = leaf;
                continue;
            }

            let features: Vec<usize> = match (&mut rng, opts.max_features) {
                (Some(r), m) if m > 0 && m < p => {
                    let mut f = sample(*r, p, m).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => (0..p).collect(),
            };
            let node_h = entropy(counts[1], counts[0]);
            let candidates: Vec<Candidate> = features
                .into_iter()
                .filter_map(|j| best_threshold(x, y, weights, &rows, j, counts, node_h, min_leaf, &mut buf))
                .collect();
            let Some(best) = choose(&candidates, opts.criterion) else {
                nodes[slot] = leaf;
                continue;
            };

            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x[[i, best.feature]] <= best.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf {
                positive: 0.0,
                weight: 0.0,
            });
            nodes.push(Node::Leaf {
                positive: 0.0,
                weight: 0.0,
            });
            nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right: left + 1,
            };
            stack.push((left + 1, right_rows, depth + 1));
            stack.push((left, left_rows, depth + 1));
        }
        DecisionTree { nodes }
    }

    fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self.leaf_for(x) {
            Node::Leaf { positive, .. } => *positive,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Best information-gain cut on one column, or None if no cut leaves
/// `min_leaf` weight on both sides.
#[allow(clippy::too_many_arguments)]
fn best_threshold(
    x: ArrayView2<f64>,
    y: &[bool],
    weights: &[f64],
    rows: &[usize],
    feature: usize,
    counts: [f64; 2],
    node_h: f64,
    min_leaf: f64,
    buf: &mut Vec<(f64, usize)>,
) -> Option<Candidate> {
    buf.clear();
    buf.extend(rows.iter().map(|&i| (x[[i, feature]], i)));
    buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total = counts[0] + counts[1];
    let mut left = [0.0f64; 2];
    let mut best: Option<Candidate> = None;
    for k in 0..buf.len() - 1 {
        let (v, i) = buf[k];
        left[y[i] as usize] += weights[i];
        if v == buf[k + 1].0 {
            continue;
        }
        let wl = left[0] + left[1];
        let wr = total - wl;
        if wl < min_leaf || wr < min_leaf {
            continue;
        }
        let right = [counts[0] - left[0], counts[1] - left[1]];
        let gain = node_h - (wl * entropy(left[1], left[0]) + wr * entropy(right[1], right[0])) / total;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(Candidate {
                feature,
                threshold: v,
                gain,
                split_info: entropy(wl, wr),
            });
        }
    }
    best.filter(|c| c.gain > 1e-12)
}

fn choose(candidates: &[Candidate], criterion: SplitCriterion) -> Option<&Candidate> {
    if candidates.is_empty() {
        return None;
    }
    match criterion {
        SplitCriterion::InfoGain => candidates.iter().reduce(|a, b| if b.gain > a.gain { b } else { a }),
        SplitCriterion::GainRatio => {
            let avg = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
            candidates
                .iter()
                .filter(|c| c.gain >= avg - 1e-12)
                .reduce(|a, b| if b.gain / b.split_info > a.gain / a.split_info { b } else { a })
        }
    }
}
