//! Ridge-penalized logistic regression fitted by full-batch gradient
//! descent with backtracking, or by shuffled minibatch SGD.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticWeights {
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl LogisticWeights {
    pub fn zeros(p: usize) -> Self {
        LogisticWeights {
            coef: vec![0.0; p],
            bias: 0.0,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.coef.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    fn norm_sq(&self) -> f64 {
        self.coef.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias
    }
}

fn linear_scores(w: &LogisticWeights, x: ArrayView2<f64>) -> Array1<f64> {
    let coef = ArrayView1::from(&w.coef[..]);
    x.dot(&coef) + w.bias
}

// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean negative log-likelihood plus `ridge/2 · ‖coef‖²` (bias unpenalized).
pub fn loss_logistic(w: &LogisticWeights, x: ArrayView2<f64>, y: &[bool], ridge: f64) -> f64 {
    let z = linear_scores(w, x);
    let n = y.len() as f64;
    let nll: f64 = z
        .iter()
        .zip(y)
        .map(|(&z, &yi)| softplus(z) - if yi { z } else { 0.0 })
        .sum::<f64>()
        / n;
    nll + 0.5 * ridge * w.coef.iter().map(|c| c * c).sum::<f64>()
}

/// Analytic gradient of [`loss_logistic`].
pub fn gradient_logistic(w: &LogisticWeights, x: ArrayView2<f64>, y: &[bool], ridge: f64) -> LogisticWeights {
    let z = linear_scores(w, x);
    let n = y.len() as f64;
    let residual: Array1<f64> = z
        .iter()
        .zip(y)
        .map(|(&z, &yi)| sigmoid(z) - if yi { 1.0 } else { 0.0 })
        .collect();
    let g = x.t().dot(&residual) / n;
    LogisticWeights {
        coef: g.iter().zip(&w.coef).map(|(g, c)| g + ridge * c).collect(),
        bias: residual.sum() / n,
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub ridge: f64,
    pub learning_rate: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Eight independent accumulators let the loop vectorize.
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `out[i] = x_i · coef + bias` over a row-major buffer with `p` columns.
fn scores_into(x: &[f64], p: usize, w: &LogisticWeights, out: &mut Array1<f64>) {
    for (o, row) in out.iter_mut().zip(x.chunks_exact(p.max(1))) {
        *o = dot(row, &w.coef) + w.bias;
    }
}

/// `Σ_i r_i x_i` over a row-major buffer.
fn weighted_row_sum(x: &[f64], p: usize, r: &Array1<f64>) -> Vec<f64> {
    let mut g = vec![0.0; p];
    for (row, &ri) in x.chunks_exact(p.max(1)).zip(r) {
        for (gj, &xj) in g.iter_mut().zip(row) {
            *gj += ri * xj;
        }
    }
    g
}

/// `Σ ln(1 + e_i)` for `e_i ∈ [0, 1]`, taking one logarithm per 256 terms
/// of a running product instead of one per term.
#[derive(Default)]
struct LogOnePlusSum {
    product: f64,
    pending: u32,
    total: f64,
}

impl LogOnePlusSum {
    fn new() -> Self {
        LogOnePlusSum {
            product: 1.0,
            ..Default::default()
        }
    }

    #[inline]
    fn add(&mut self, e: f64, count: f64) {
        if count != 1.0 {
            self.total += count * e.ln_1p();
            return;
        }
        self.product *= 1.0 + e;
        self.pending += 1;
        // 2^256 stays far from overflow.
        if self.pending == 256 {
            self.flush();
        }
    }

    fn flush(&mut self) {
        self.total += self.product.ln();
        self.product = 1.0;
        self.pending = 0;
    }

    fn finish(mut self) -> f64 {
        self.flush();
        self.total
    }
}

/// Count-weighted loss sum and weighted residuals at linear scores `z`,
/// sharing one `exp` per row.
fn evaluate_scores(z: &Array1<f64>, y: &[bool], counts: &[f64], residual: &mut Array1<f64>) -> f64 {
    let mut nll = 0.0;
    let mut logs = LogOnePlusSum::new();
    for (((&zi, &yi), &c), r) in z.iter().zip(y).zip(counts).zip(residual.iter_mut()) {
        let e = (-zi.abs()).exp();
        nll += c * (zi.max(0.0) - if yi { zi } else { 0.0 });
        logs.add(e, c);
        let p = if zi >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
        *r = c * (p - if yi { 1.0 } else { 0.0 });
    }
    nll + logs.finish()
}

/// Collapses repeated (row, label) pairs into one row with a count, in
/// order of first appearance. The loss is a sum over rows, so fitting the
/// collapsed set is the same problem; one-hot data shrinks a lot.
fn collapse_rows(x: &[f64], p: usize, y: &[bool]) -> (Vec<f64>, Vec<bool>, Vec<f64>) {
    let mut index: HashMap<(Vec<u64>, bool), usize> = HashMap::new();
    let (mut ux, mut uy, mut counts) = (Vec::new(), Vec::new(), Vec::new());
    for (row, &yi) in x.chunks_exact(p.max(1)).zip(y) {
        // Bit patterns as keys; +0.0 and -0.0 are merged.
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        match index.entry((key, yi)) {
            Entry::Occupied(e) => counts[*e.get()] += 1.0,
            Entry::Vacant(e) => {
                e.insert(uy.len());
                ux.extend_from_slice(row);
                uy.push(yi);
                counts.push(1.0);
            }
        }
    }
    (ux, uy, counts)
}

/// Full-batch gradient descent. Each iteration tries the base learning
/// rate and halves it until the Armijo condition holds; stops when the
/// gradient norm drops below `tolerance` or after `max_iterations`.
pub fn fit_batch(x: ArrayView2<f64>, y: &[bool], opts: &BatchOptions) -> LogisticWeights {
    let n = y.len() as f64;
    let p = x.ncols();
    let x = x.as_standard_layout();
    let (x, y, counts) = collapse_rows(x.as_slice().expect("standard layout"), p, y);
    let (x, y) = (&x[..], &y[..]);
    let rows = || x.chunks_exact(p.max(1));
    let penalty = |w: &LogisticWeights| 0.5 * opts.ridge * w.coef.iter().map(|c| c * c).sum::<f64>();
    let gradient = |raw: &[f64], residual: &Array1<f64>, w: &LogisticWeights| LogisticWeights {
        coef: raw.iter().zip(&w.coef).map(|(g, c)| g / n + opts.ridge * c).collect(),
        bias: residual.sum() / n,
    };

    let mut w = LogisticWeights::zeros(p);
    let mut z = Array1::zeros(y.len());
    scores_into(x, p, &w, &mut z);
    let mut residual = Array1::zeros(y.len());
    let mut loss = evaluate_scores(&z, y, &counts, &mut residual) / n + penalty(&w);
    let mut g = gradient(&weighted_row_sum(x, p, &residual), &residual, &w);

    let mut direction = Array1::zeros(y.len());
    let mut trial_z = Array1::zeros(y.len());
    let mut trial_residual = Array1::zeros(y.len());
    let mut trial_raw = vec![0.0; p];
    for _ in 0..opts.max_iterations {
        let g_sq = g.norm_sq();
        if g_sq.sqrt() < opts.tolerance {
            break;
        }
        // One sweep computes the search direction X·g and, speculating that
        // the full step is accepted, the next gradient at that point.
        let lr = opts.learning_rate;
        trial_raw.iter_mut().for_each(|v| *v = 0.0);
        let mut nll = 0.0;
        let mut logs = LogOnePlusSum::new();
        for (i, row) in rows().enumerate() {
            let d = dot(row, &g.coef) + g.bias;
            direction[i] = d;
            let zi = z[i] - lr * d;
            trial_z[i] = zi;
            let e = (-zi.abs()).exp();
            let yi = if y[i] { 1.0 } else { 0.0 };
            let c = counts[i];
            nll += c * (zi.max(0.0) - yi * zi);
            logs.add(e, c);
            let r = c * (if zi >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) } - yi);
            trial_residual[i] = r;
            for (a, &xj) in trial_raw.iter_mut().zip(row) {
                *a += r * xj;
            }
        }
        let step_to = |step: f64| LogisticWeights {
            coef: w.coef.iter().zip(&g.coef).map(|(c, d)| c - step * d).collect(),
            bias: w.bias - step * g.bias,
        };
        let candidate = step_to(lr);
        let candidate_loss = (nll + logs.finish()) / n + penalty(&candidate);
        if candidate_loss <= loss - 0.5 * lr * g_sq {
            std::mem::swap(&mut z, &mut trial_z);
            std::mem::swap(&mut residual, &mut trial_residual);
            g = gradient(&trial_raw, &residual, &candidate);
            w = candidate;
            loss = candidate_loss;
            continue;
        }
        let mut step = 0.5 * lr;
        let mut accepted = false;
        while step > 1e-12 {
            let candidate = step_to(step);
            trial_z.zip_mut_with(&z, |t, &zi| *t = zi);
            trial_z.scaled_add(-step, &direction);
            let candidate_loss = evaluate_scores(&trial_z, y, &counts, &mut trial_residual) / n + penalty(&candidate);
            if candidate_loss <= loss - 0.5 * step * g_sq {
                std::mem::swap(&mut z, &mut trial_z);
                std::mem::swap(&mut residual, &mut trial_residual);
                g = gradient(&weighted_row_sum(x, p, &residual), &residual, &candidate);
                w = candidate;
                loss = candidate_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    w
}

#[derive(Debug, Clone)]
pub struct SgdOptions {
    pub ridge: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

/// Minibatch SGD with a per-epoch seeded shuffle.
pub fn fit_sgd(x: ArrayView2<f64>, y: &[bool], opts: &SgdOptions) -> LogisticWeights {
    let n = x.nrows();
    let mut w = LogisticWeights::zeros(x.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size.max(1)) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<bool> = batch.iter().map(|&i| y[i]).collect();
            let g = gradient_logistic(&w, xb.view(), &yb, opts.ridge);
            for (c, d) in w.coef.iter_mut().zip(&g.coef) {
                *c -= opts.learning_rate * d;
            }
            w.bias -= opts.learning_rate * g.bias;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn random_problem(seed: u64, n: usize, p: usize) -> (Array2<f64>, Vec<bool>, LogisticWeights) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
        let y = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let w = LogisticWeights {
            coef: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-1.0..1.0),
        };
        (x, y, w)
    }

    #[test]
    fn zero_weights_give_half() {
        let w = LogisticWeights::zeros(3);
        assert_eq!(w.predict_proba(&[5.0, -2.0, 100.0]), 0.5);
    }

    #[test]
    fn balanced_labels_zero_bias_gradient() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [2.0, 2.0]];
        let y = [true, false, true, false];
        let g = gradient_logistic(&LogisticWeights::zeros(2), x.view(), &y, 0.0);
        assert_eq!(g.bias, 0.0);
    }

    #[test]
    fn ridge_shifts_gradient_by_lambda_w() {
        let (x, y, w) = random_problem(3, 5, 3);
        let lambda = 0.37;
        let g0 = gradient_logistic(&w, x.view(), &y, 0.0);
        let g1 = gradient_logistic(&w, x.view(), &y, lambda);
        for j in 0..3 {
            assert!((g1.coef[j] - g0.coef[j] - lambda * w.coef[j]).abs() < 1e-15);
        }
        assert_eq!(g1.bias, g0.bias);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for seed in 0..10 {
            let (x, y, w) = random_problem(seed, 5, 3);
            let ridge = 0.1;
            let g = gradient_logistic(&w, x.view(), &y, ridge);
            for j in 0..=3 {
                let mut plus = w.clone();
                let mut minus = w.clone();
                if j < 3 {
                    plus.coef[j] += h;
                    minus.coef[j] -= h;
                } else {
                    plus.bias += h;
                    minus.bias -= h;
                }
                let fd = (loss_logistic(&plus, x.view(), &y, ridge) - loss_logistic(&minus, x.view(), &y, ridge)) / (2.0 * h);
                let analytic = if j < 3 { g.coef[j] } else { g.bias };
                let rel = (fd - analytic).abs() / analytic.abs().max(1e-8);
                assert!(rel < 1e-6, "seed {seed} param {j}: fd {fd} analytic {analytic}");
            }
        }
    }

    #[test]
    fn batch_fit_separates_easy_data() {
        let x = array![[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]];
        let y = [false, false, false, true, true, true];
        let w = fit_batch(
            x.view(),
            &y,
            &BatchOptions {
                ridge: 1e-8,
                learning_rate: 0.1,
                tolerance: 1e-6,
                max_iterations: 2000,
            },
        );
        assert!(w.coef[0] > 1.0);
        for (row, label) in x.rows().into_iter().zip(y) {
            assert_eq!(w.predict_proba(row.as_slice().unwrap()) >= 0.5, label);
        }
    }

    #[test]
    fn sgd_is_seed_deterministic() {
        let (x, y, _) = random_problem(9, 100, 4);
        let opts = SgdOptions {
            ridge: 1e-8,
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 5,
            seed: 11,
        };
        assert_eq!(fit_sgd(x.view(), &y, &opts), fit_sgd(x.view(), &y, &opts));
    }
}
