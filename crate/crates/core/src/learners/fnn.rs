//! Feed-forward network: two ReLU hidden layers of width 2·p and a
//! two-way softmax output, trained by minibatch gradient descent on the
//! mean softmax cross-entropy.
//!
//! Training runs in f32; the stored model, the loss and the gradient used
//! for checking are f64.

use std::fmt::Debug;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;

/// Float types the network arithmetic runs in.
pub trait Real: LinalgScalar + ScalarOperand + PartialOrd + Debug + Send + Sync {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnParams<T = f64> {
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    pub w3: Array2<T>,
    pub b3: Array1<T>,
}

impl<T: Real> FnnParams<T> {
    pub fn cast<U: Real>(&self) -> FnnParams<U> {
        let c = |v: &T| U::from_f64(v.to_f64());
        FnnParams {
            w1: self.w1.map(c),
            b1: self.b1.map(c),
            w2: self.w2.map(c),
            b2: self.b2.map(c),
            w3: self.w3.map(c),
            b3: self.b3.map(c),
        }
    }

    fn step(&mut self, grad: &FnnParams<T>, lr: T) {
        let m = T::zero() - lr;
        self.w1.scaled_add(m, &grad.w1);
        self.b1.scaled_add(m, &grad.b1);
        self.w2.scaled_add(m, &grad.w2);
        self.b2.scaled_add(m, &grad.b2);
        self.w3.scaled_add(m, &grad.w3);
        self.b3.scaled_add(m, &grad.b3);
    }
}

#[derive(Debug, Clone)]
pub struct FnnOptions {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl FnnParams {
    /// He-style uniform weights `U(±sqrt(6 / fan_in))`, zero biases.
    pub fn init(inputs: usize, seed: u64) -> Self {
        let hidden = 2 * inputs;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = |fan_in: usize, fan_out: usize| {
            let bound = (6.0 / fan_in as f64).sqrt();
            Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound))
        };
        FnnParams {
            w1: layer(inputs, hidden),
            b1: Array1::zeros(hidden),
            w2: layer(hidden, hidden),
            b2: Array1::zeros(hidden),
            w3: layer(hidden, 2),
            b3: Array1::zeros(2),
        }
    }

    pub fn zeros_like(&self) -> Self {
        FnnParams {
            w1: Array2::zeros(self.w1.dim()),
            b1: Array1::zeros(self.b1.len()),
            w2: Array2::zeros(self.w2.dim()),
            b2: Array1::zeros(self.b2.len()),
            w3: Array2::zeros(self.w3.dim()),
            b3: Array1::zeros(self.b3.len()),
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.w3.len() + self.b3.len()
    }

    /// All parameters in a fixed order (w1, b1, w2, b2, w3, b3), row-major.
    pub fn flat_mut(&mut self) -> Vec<&mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
            .chain(self.w3.iter_mut())
            .chain(self.b3.iter_mut())
            .collect()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .chain(&self.w3)
            .chain(&self.b3)
            .copied()
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        fnn_forward(self, x)[1]
    }

    pub fn predict_proba_batch(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let (_, _, _, _, logits) = forward_batch(self, x);
        logits.rows().into_iter().map(|l| sigmoid(l[1] - l[0])).collect()
    }
}

/// Class distribution `[P(negative), P(positive)]` for one input row.
pub fn fnn_forward(params: &FnnParams, x: &[f64]) -> [f64; 2] {
    let x = ArrayView2::from_shape((1, x.len()), x).expect("row shape");
    let (_, _, _, _, logits) = forward_batch(params, x);
    let p = sigmoid(logits[[0, 1]] - logits[[0, 0]]);
    [1.0 - p, p]
}

type Activations<T> = (Array2<T>, Array2<T>, Array2<T>, Array2<T>, Array2<T>);

fn relu<T: Real>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

fn forward_batch<T: Real>(p: &FnnParams<T>, x: ArrayView2<T>) -> Activations<T> {
    let z1 = x.dot(&p.w1) + &p.b1;
    let a1 = z1.mapv(relu);
    let z2 = a1.dot(&p.w2) + &p.b2;
    let a2 = z2.mapv(relu);
    let logits = a2.dot(&p.w3) + &p.b3;
    (z1, a1, z2, a2, logits)
}

fn cross_entropy(logits: ArrayView2<f64>, y: &[bool]) -> f64 {
    // -log softmax_y = logsumexp(l) - l_y
    let total: f64 = logits
        .rows()
        .into_iter()
        .zip(y)
        .map(|(l, &yi)| {
            let m = l[0].max(l[1]);
            let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
            lse - l[yi as usize]
        })
        .sum();
    total / y.len() as f64
}

/// Mean softmax cross-entropy of a batch.
pub fn fnn_loss(params: &FnnParams, x: ArrayView2<f64>, y: &[bool]) -> f64 {
    let (_, _, _, _, logits) = forward_batch(params, x);
    cross_entropy(logits.view(), y)
}

/// Gradient of [`fnn_loss`] with respect to every parameter, plus the loss.
pub fn fnn_backprop(params: &FnnParams, x: ArrayView2<f64>, y: &[bool]) -> (FnnParams, f64) {
    let acts = forward_batch(params, x);
    let loss = cross_entropy(acts.4.view(), y);
    (backprop(params, x, y, acts), loss)
}

fn backprop<T: Real>(params: &FnnParams<T>, x: ArrayView2<T>, y: &[bool], acts: Activations<T>) -> FnnParams<T> {
    let (z1, a1, z2, a2, logits) = acts;
    let n = y.len() as f64;

    let mut d3 = logits;
    for (mut row, &yi) in d3.rows_mut().into_iter().zip(y) {
        let p1 = sigmoid(row[1].to_f64() - row[0].to_f64());
        row[0] = T::from_f64((1.0 - p1 - if yi { 0.0 } else { 1.0 }) / n);
        row[1] = T::from_f64((p1 - if yi { 1.0 } else { 0.0 }) / n);
    }
    let gw3 = a2.t().dot(&d3);
    let gb3 = d3.sum_axis(Axis(0));

    let mut d2 = d3.dot(&params.w3.t());
    d2.zip_mut_with(&z2, |d, &z| {
        if z <= T::zero() {
            *d = T::zero()
        }
    });
    let gw2 = a1.t().dot(&d2);
    let gb2 = d2.sum_axis(Axis(0));

    let mut d1 = d2.dot(&params.w2.t());
    d1.zip_mut_with(&z1, |d, &z| {
        if z <= T::zero() {
            *d = T::zero()
        }
    });
    let gw1 = x.t().dot(&d1);
    let gb1 = d1.sum_axis(Axis(0));

    FnnParams {
        w1: gw1,
        b1: gb1,
        w2: gw2,
        b2: gb2,
        w3: gw3,
        b3: gb3,
    }
}

/// Seeded init, then `epochs` passes of shuffled minibatch gradient descent.
pub fn fit(x: ArrayView2<f64>, y: &[bool], opts: &FnnOptions) -> FnnParams {
    let n = x.nrows();
    let mut params: FnnParams<f32> = FnnParams::init(x.ncols(), opts.seed).cast();
    let x = x.mapv(|v| v as f32);
    let lr = opts.learning_rate as f32;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let batch = opts.batch_size.max(1);
    let mut xb = Array2::zeros((batch, x.ncols()));
    let mut yb = Vec::with_capacity(batch);
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            yb.clear();
            for (r, &i) in chunk.iter().enumerate() {
                xb.row_mut(r).assign(&x.row(i));
                yb.push(y[i]);
            }
            let xv = xb.slice(s![..chunk.len(), ..]);
            let grad = backprop(&params, xv, &yb, forward_batch(&params, xv));
            params.step(&grad, lr);
        }
    }
    params.cast()
}
