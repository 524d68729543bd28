//! The 2NN multilayer perceptron: forward pass, backpropagation, local SGD
//! and SGA training, and evaluation.
//!
//! Parameters live in a single [`ParamVector`] with the canonical layout
//!
//! ```text
//! W1 (in × h1, row-major) | b1 (h1) | W2 (h1 × h2) | b2 (h2) | W3 (h2 × out) | b3 (out)
//! ```
//!
//! Weight matrices are input-major, so a layer computes `z = x · W + b` for
//! a row vector `x`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Shard, IMAGE_DIM};
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::seed;

/// Whether local training minimizes or maximizes the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Descent,
    Ascent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub direction: Direction,
    pub seed: u64,
    /// When set, parameters are projected back onto the L2 ball of this
    /// radius after every step.
    #[serde(default)]
    pub max_norm: Option<f64>,
}

impl TrainConfig {
    /// Table defaults: lr 0.1, 5 epochs, batches of 32.
    pub fn new(seed: u64) -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 5,
            batch_size: 32,
            direction: Direction::Descent,
            seed,
            max_norm: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if let Some(r) = self.max_norm {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "projection radius must be positive, got {r}"
                )));
            }
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Accuracy and mean cross-entropy on a labeled set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
}

/// A trainable model over flat parameter vectors.
pub trait Model: Send + Sync {
    fn param_count(&self) -> usize;

    fn init(&self, seed: u64) -> ParamVector;

    /// Class probabilities, one row per input row.
    fn forward(&self, params: &ParamVector, images: ArrayView2<'_, f64>) -> Result<Array2<f64>>;

    /// Gradient of the mean cross-entropy over the whole shard.
    fn gradient(&self, params: &ParamVector, data: &Dataset, shard: &Shard) -> Result<ParamVector>;

    /// Minibatch SGD (or SGA) starting from `params`.
    fn train_local(
        &self,
        params: &ParamVector,
        data: &Dataset,
        shard: &Shard,
        config: &TrainConfig,
    ) -> Result<ParamVector>;

    fn evaluate(&self, params: &ParamVector, data: &Dataset, shard: &Shard) -> Result<Evaluation>;
}

/// Three dense layers, ReLU on the hidden layers and softmax output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    sizes: [usize; 4],
}

impl Mlp {
    /// 784 → 200 → 200 → 10.
    pub fn two_nn() -> Self {
        Self::new(IMAGE_DIM, 200, 200, 10)
    }

    pub fn new(input: usize, hidden1: usize, hidden2: usize, output: usize) -> Self {
        Self {
            sizes: [input, hidden1, hidden2, output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn classes(&self) -> usize {
        self.sizes[3]
    }

    fn layer_dims(&self) -> [(usize, usize); 3] {
        [
            (self.sizes[0], self.sizes[1]),
            (self.sizes[1], self.sizes[2]),
            (self.sizes[2], self.sizes[3]),
        ]
    }

    fn unflatten(&self, params: &ParamVector) -> Result<Layers> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut offset = 0;
        let mut take = |n: usize| {
            let s = &params[offset..offset + n];
            offset += n;
            s.to_vec()
        };
        let mut weights = Vec::with_capacity(3);
        let mut biases = Vec::with_capacity(3);
        for (fan_in, fan_out) in self.layer_dims() {
            weights.push(Array2::from_shape_vec((fan_in, fan_out), take(fan_in * fan_out)).unwrap());
            biases.push(Array1::from_vec(take(fan_out)));
        }
        Ok(Layers { weights, biases })
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    fn check_labels(&self, shard: &Shard) -> Result<()> {
        if let Some(&bad) = shard.labels.iter().find(|&&l| usize::from(l) >= self.classes()) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {} classes",
                self.classes()
            )));
        }
        Ok(())
    }
}

/// Weights and biases in their matrix form.
#[derive(Debug, Clone)]
struct Layers {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

struct Activations {
    /// Pre-activations of the two hidden layers.
    hidden_pre: [Array2<f64>; 2],
    /// Post-ReLU hidden outputs.
    hidden: [Array2<f64>; 2],
    logits: Array2<f64>,
}

impl Layers {
    fn flatten(&self) -> Result<ParamVector> {
        let total: usize =
            self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>();
        let mut out = Vec::with_capacity(total);
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        ParamVector::new(out)
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Activations {
        let z1 = x.dot(&self.weights[0]) + &self.biases[0];
        let h1 = z1.mapv(relu);
        let z2 = h1.dot(&self.weights[1]) + &self.biases[1];
        let h2 = z2.mapv(relu);
        let logits = h2.dot(&self.weights[2]) + &self.biases[2];
        Activations {
            hidden_pre: [z1, z2],
            hidden: [h1, h2],
            logits,
        }
    }

    /// Mean cross-entropy and its gradient for one batch.
    fn backward(&self, x: ArrayView2<'_, f64>, labels: &[u8]) -> (f64, Layers) {
        let batch = x.nrows() as f64;
        let act = self.forward(x);
        let mut delta = act.logits.clone();
        let mut loss = 0.0;
        for (mut row, &label) in delta.rows_mut().into_iter().zip(labels) {
            let lse = log_sum_exp(row.view());
            loss += lse - row[usize::from(label)];
            row.mapv_inplace(|z| (z - lse).exp());
            row[usize::from(label)] -= 1.0;
        }
        delta /= batch;

        let g3 = act.hidden[1].t().dot(&delta);
        let gb3 = delta.sum_axis(Axis(0));
        let mut d2 = delta.dot(&self.weights[2].t());
        relu_mask(&mut d2, &act.hidden_pre[1]);
        let g2 = act.hidden[0].t().dot(&d2);
        let gb2 = d2.sum_axis(Axis(0));
        let mut d1 = d2.dot(&self.weights[1].t());
        relu_mask(&mut d1, &act.hidden_pre[0]);
        let g1 = x.t().dot(&d1);
        let gb1 = d1.sum_axis(Axis(0));

        let grads = Layers {
            weights: vec![g1, g2, g3],
            biases: vec![gb1, gb2, gb3],
        };
        (loss / batch, grads)
    }

    /// `self += step · grads`.
    fn apply(&mut self, grads: &Layers, step: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.scaled_add(step, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.scaled_add(step, g);
        }
    }
}

impl Layers {
    fn norm(&self) -> f64 {
        let sq: f64 = self.weights.iter().flat_map(|w| w.iter()).map(|v| v * v).sum::<f64>()
            + self.biases.iter().flat_map(|b| b.iter()).map(|v| v * v).sum::<f64>();
        sq.sqrt()
    }

    fn project(&mut self, radius: f64) {
        let norm = self.norm();
        if norm > radius {
            let f = radius / norm;
            self.weights.iter_mut().for_each(|w| *w *= f);
            self.biases.iter_mut().for_each(|b| *b *= f);
        }
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

fn relu_mask(delta: &mut Array2<f64>, pre: &Array2<f64>) {
    delta.zip_mut_with(pre, |d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
}

fn log_sum_exp(row: ArrayView1<'_, f64>) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + row.fold(0.0, |acc, &v| acc + (v - max).exp()).ln()
}

fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let lse = log_sum_exp(row.view());
        row.mapv_inplace(|z| (z - lse).exp());
    }
    logits
}

/// Index of the largest entry; ties go to the lowest index.
fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn gather(data: &Dataset, indices: &[usize]) -> Array2<f64> {
    let dim = data.dim();
    let mut x = Array2::zeros((indices.len(), dim));
    for (mut row, &i) in x.rows_mut().into_iter().zip(indices) {
        row.as_slice_mut()
            .expect("standard layout")
            .copy_from_slice(data.image(i));
    }
    x
}

const EVAL_CHUNK: usize = 1000;

impl Model for Mlp {
    fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    /// Glorot-uniform weights, zero biases.
    fn init(&self, seed: u64) -> ParamVector {
        let mut rng = seed::rng(seed::derive(seed, seed::Stream::ModelInit, &[]));
        let mut out = Vec::with_capacity(self.param_count());
        for (fan_in, fan_out) in self.layer_dims() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            out.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            out.extend(std::iter::repeat_n(0.0, fan_out));
        }
        ParamVector::new(out).expect("uniform draws are finite")
    }

    fn forward(&self, params: &ParamVector, images: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(images.ncols())?;
        let layers = self.unflatten(params)?;
        Ok(softmax_rows(layers.forward(images).logits))
    }

    fn gradient(&self, params: &ParamVector, data: &Dataset, shard: &Shard) -> Result<ParamVector> {
        if shard.is_empty() {
            return Err(Error::Empty("gradient needs a non-empty batch"));
        }
        self.check_input(data.dim())?;
        self.check_labels(shard)?;
        let layers = self.unflatten(params)?;
        let x = gather(data, &shard.indices);
        let (_, grads) = layers.backward(x.view(), &shard.labels);
        grads.flatten()
    }

    fn train_local(
        &self,
        params: &ParamVector,
        data: &Dataset,
        shard: &Shard,
        config: &TrainConfig,
    ) -> Result<ParamVector> {
        config.validate()?;
        if shard.is_empty() {
            return Err(Error::Empty("local training needs a non-empty shard"));
        }
        self.check_input(data.dim())?;
        self.check_labels(shard)?;
        let mut layers = self.unflatten(params)?;
        let step = match config.direction {
            Direction::Descent => -config.learning_rate,
            Direction::Ascent => config.learning_rate,
        };
        let mut order: Vec<usize> = (0..shard.len()).collect();
        let mut batch_idx = Vec::with_capacity(config.batch_size);
        let mut batch_labels = Vec::with_capacity(config.batch_size);
        for epoch in 0..config.epochs {
            order.shuffle(&mut seed::rng(seed::derive(
                config.seed,
                seed::Stream::ClientTraining,
                &[epoch as u64],
            )));
            for chunk in order.chunks(config.batch_size) {
                batch_idx.clear();
                batch_labels.clear();
                for &pos in chunk {
                    batch_idx.push(shard.indices[pos]);
                    batch_labels.push(shard.labels[pos]);
                }
                let x = gather(data, &batch_idx);
                let (_, grads) = layers.backward(x.view(), &batch_labels);
                layers.apply(&grads, step);
                if let Some(radius) = config.max_norm {
                    layers.project(radius);
                }
            }
        }
        layers.flatten()
    }

    fn evaluate(&self, params: &ParamVector, data: &Dataset, shard: &Shard) -> Result<Evaluation> {
        if shard.is_empty() {
            return Err(Error::Empty("evaluation needs a non-empty set"));
        }
        self.check_input(data.dim())?;
        self.check_labels(shard)?;
        let layers = self.unflatten(params)?;
        let mut correct = 0usize;
        let mut loss = 0.0;
        for (idx, labels) in shard.indices.chunks(EVAL_CHUNK).zip(shard.labels.chunks(EVAL_CHUNK)) {
            let x = gather(data, idx);
            let logits = layers.forward(x.view()).logits;
            for (row, &label) in logits.rows().into_iter().zip(labels) {
                let label = usize::from(label);
                loss += log_sum_exp(row) - row[label];
                if argmax(row) == label {
                    correct += 1;
                }
            }
        }
        let n = shard.len() as f64;
        Ok(Evaluation {
            accuracy: correct as f64 / n,
            loss: loss / n,
        })
    }
}

/// Mean cross-entropy of `params` on `shard`.
pub fn mean_loss(model: &impl Model, params: &ParamVector, data: &Dataset, shard: &Shard) -> Result<f64> {
    Ok(model.evaluate(params, data, shard)?.loss)
}

/// Parameter slice of layer `layer` (0-based) weights, for tests and tooling.
pub fn weight_range(model: &Mlp, layer: usize) -> std::ops::Range<usize> {
    let mut offset = 0;
    for (l, (i, o)) in model.layer_dims().into_iter().enumerate() {
        if l == layer {
            return offset..offset + i * o;
        }
        offset += i * o + o;
    }
    panic!("layer {layer} out of range");
}
