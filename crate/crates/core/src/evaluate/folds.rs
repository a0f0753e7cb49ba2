use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    /// Fold id for each instance.
    pub assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles positives and negatives separately, lays them out positives
/// first, and deals instances round-robin. Both fold sizes and per-fold
/// positive counts then differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::Validation(format!("k must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::Validation(format!("k = {k} exceeds the {n} instances")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        assignment[i] = slot % k;
    }
    Ok(FoldAssignment { k, seed, assignment })
}
