//! Random forest: bootstrap samples, information-gain trees with a random
//! column subset per node, probability = fraction of trees voting positive.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, SplitCriterion, TreeOptions};

#[derive(Debug, Clone)]
pub struct ForestOptions {
    pub n_trees: usize,
    /// 0 = floor(sqrt(p)).
    pub max_features: usize,
    pub min_leaf: usize,
    /// 0 = unlimited.
    pub max_depth: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws from its own ChaCha stream `t` under `seed`, so the
    /// result does not depend on how trees are scheduled across threads.
    pub fn fit(x: ArrayView2<f64>, y: &[bool], opts: &ForestOptions) -> Self {
        let (n, p) = x.dim();
        let m = if opts.max_features == 0 {
            ((p as f64).sqrt().floor() as usize).max(1)
        } else {
            opts.max_features.min(p)
        };
        let tree_opts = TreeOptions {
            criterion: SplitCriterion::InfoGain,
            min_leaf: opts.min_leaf,
            max_depth: opts.max_depth,
            max_features: m,
        };
        let trees = (0..opts.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(t as u64);
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
                DecisionTree::fit_weighted(x, y, &weights, &tree_opts, Some(&mut rng))
            })
            .collect();
        RandomForest { trees }
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict_proba(x) > 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn opts(seed: u64) -> ForestOptions {
        ForestOptions {
            n_trees: 15,
            max_features: 0,
            min_leaf: 1,
            max_depth: 0,
            seed,
        }
    }

    fn toy(n: usize) -> (Array2<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(0..20) as f64);
        let y = (0..n).map(|i| x[[i, 0]] + x[[i, 2]] > 20.0).collect();
        (x, y)
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (x, y) = toy(60);
        let a = RandomForest::fit(x.view(), &y, &opts(3));
        let b = RandomForest::fit(x.view(), &y, &opts(3));
        assert_eq!(a, b);
        let c = RandomForest::fit(x.view(), &y, &opts(4));
        assert_ne!(a, c);
    }

    #[test]
    fn parallel_matches_serial() {
        let (x, y) = toy(60);
        let parallel = RandomForest::fit(x.view(), &y, &opts(9));
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| RandomForest::fit(x.view(), &y, &opts(9)));
        assert_eq!(parallel, serial);
    }

    #[test]
    fn unanimous_positive_vote_is_one() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i + j) as f64);
        let y = vec![true; 10];
        let f = RandomForest::fit(x.view(), &y, &opts(1));
        assert_eq!(f.predict_proba(&[3.0, 4.0]), 1.0);
    }

    #[test]
    fn invariant_under_increasing_transform() {
        let (x, y) = toy(80);
        let xt = x.mapv(|v| (v * 0.3).exp() - 2.0);
        let a = RandomForest::fit(x.view(), &y, &opts(11));
        let b = RandomForest::fit(xt.view(), &y, &opts(11));
        for i in 0..x.nrows() {
            let r = x.row(i).to_vec();
            let rt: Vec<f64> = r.iter().map(|v| (v * 0.3).exp() - 2.0).collect();
            assert_eq!(a.predict_proba(&r), b.predict_proba(&rt));
        }
    }
}
