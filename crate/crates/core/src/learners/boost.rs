//! Boosted ensembles: discrete AdaBoost over weighted stumps, and two-class
//! LogitBoost over univariate weighted least-squares regressors.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::rules::Stump;
use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
}

impl AdaBoost {
    /// Stops early once a round's weighted error reaches 0.5 (no better than
    /// chance) or 0 (perfect; that stump is kept).
    pub fn fit(x: ArrayView2<f64>, y: &[bool], rounds: usize) -> Self {
        let n = y.len();
        let mut w = vec![1.0 / n as f64; n];
        let mut model = AdaBoost {
            stumps: Vec::new(),
            alphas: Vec::new(),
        };
        let rows: Vec<&[f64]> = x.rows().into_iter().map(|r| r.to_slice().expect("standard layout")).collect();
        for _ in 0..rounds {
            let stump = Stump::fit(x, y, &w);
            let wrong: Vec<bool> = rows.iter().zip(y).map(|(r, &l)| stump.predict(r) != l).collect();
            let eps: f64 = w.iter().zip(&wrong).filter(|(_, &bad)| bad).map(|(wi, _)| wi).sum();
            if eps >= 0.5 {
                if model.stumps.is_empty() {
                    model.stumps.push(stump);
                    model.alphas.push(1.0);
                }
                break;
            }
            let alpha = 0.5 * ((1.0 - eps) / eps.max(1e-10)).ln();
            model.stumps.push(stump);
            model.alphas.push(alpha);
            if eps == 0.0 {
                break;
            }
            // Reweight: mistakes up, hits down, then renormalize.
            for (wi, &bad) in w.iter_mut().zip(&wrong) {
                *wi *= if bad { alpha.exp() } else { (-alpha).exp() };
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }
        model
    }

    /// Alpha-weighted fraction of members voting positive.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.vote(x, self.stumps.len())
    }

    /// Score using only the first `k` members.
    pub fn vote(&self, x: &[f64], k: usize) -> f64 {
        let k = k.min(self.stumps.len());
        let total: f64 = self.alphas[..k].iter().sum();
        if total <= 0.0 {
            return 0.5;
        }
        let pos: f64 = self.stumps[..k]
            .iter()
            .zip(&self.alphas)
            .filter(|(s, _)| s.predict(x))
            .map(|(_, a)| a)
            .sum();
        pos / total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub feature: usize,
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitBoost {
    pub terms: Vec<LinearTerm>,
}

/// Working-response clamp, as is usual for LogitBoost.
const Z_MAX: f64 = 3.0;

impl LogitBoost {
    pub fn fit(x: ArrayView2<f64>, y: &[bool], rounds: usize) -> Self {
        let n = y.len();
        let mut f = vec![0.0; n];
        let mut terms = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let mut z = vec![0.0; n];
            let mut w = vec![0.0; n];
            for i in 0..n {
                let p = sigmoid(2.0 * f[i]);
                let target = if y[i] { 1.0 } else { 0.0 };
                w[i] = (p * (1.0 - p)).max(1e-10);
                z[i] = ((target - p) / w[i]).clamp(-Z_MAX, Z_MAX);
            }
            let term = best_univariate(x, &z, &w);
            let col = x.column(term.feature);
            for i in 0..n {
                f[i] += 0.5 * (term.intercept + term.slope * col[i]);
            }
            terms.push(term);
        }
        LogitBoost { terms }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| 0.5 * (t.intercept + t.slope * x[t.feature])).sum()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(2.0 * self.decision(x))
    }
}

/// Weighted least-squares fit `z ≈ a + b·x_j` on the column with the smallest
/// weighted residual sum of squares (ties: lowest column).
fn best_univariate(x: ArrayView2<f64>, z: &[f64], w: &[f64]) -> LinearTerm {
    let sw: f64 = w.iter().sum();
    let zbar = z.iter().zip(w).map(|(z, w)| z * w).sum::<f64>() / sw;
    let szz: f64 = z.iter().zip(w).map(|(z, w)| w * (z - zbar) * (z - zbar)).sum();
    let mut best = LinearTerm {
        feature: 0,
        intercept: zbar,
        slope: 0.0,
    };
    let mut best_sse = f64::INFINITY;
    for j in 0..x.ncols() {
        let col = x.column(j);
        let xbar = col.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
        let (mut sxx, mut sxz) = (0.0, 0.0);
        for ((xi, zi), wi) in col.iter().zip(z).zip(w) {
            let dx = xi - xbar;
            sxx += wi * dx * dx;
            sxz += wi * dx * (zi - zbar);
        }
        let slope = if sxx > 1e-12 * sw { sxz / sxx } else { 0.0 };
        let sse = szz - slope * sxz;
        if sse < best_sse - 1e-12 * szz.max(1e-300) {
            best_sse = sse;
            best = LinearTerm {
                feature: j,
                intercept: zbar - slope * xbar,
                slope,
            };
        }
    }
    best
}
