//! From-scratch feed-forward network for grasp-success prediction.
//!
//! Architecture is fixed to input → 16 → 8 → 4 → 4 → 1 with ReLU hidden
//! activations and a sigmoid output. Training runs full-batch by default
//! under Adam with cosine-annealed learning rate, and the reported model is
//! the checkpoint with the best test-set accuracy (ties resolved toward the
//! earliest epoch). Everything is seeded and single-threaded, so a run
//! reproduces bit-for-bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::features::TrainingSample;
use crate::seeding::derive_seed;

/// Hidden layer widths; the output layer always has one unit.
pub const HIDDEN_DIMS: [usize; 4] = [16, 8, 4, 4];

/// Probability clamp for the binary cross-entropy loss.
pub const PROBABILITY_CLAMP: f64 = 1e-7;

const MODEL_MAGIC: &[u8; 6] = b"GCMLP\0";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("input has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("inconsistent feature dimension in batch: {got} vs {expected}")]
    RaggedBatch { expected: usize, got: usize },
    #[error("model file {path}: {message}")]
    BadModelFile { path: std::path::PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Layer weights and biases. Weight matrices are (fan_out × fan_in).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

impl MlpModel {
    /// Seeded He-style initialization: weights uniform in
    /// `±sqrt(6 / fan_in)`, biases zero. Draw order is fixed (layers in
    /// order, weights row-major), so a seed pins the parameters exactly.
    pub fn new_seeded(input_dim: usize, seed: u64) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&HIDDEN_DIMS);
        dims.push(1);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for layer in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut w = DMatrix::zeros(fan_out, fan_in);
            for r in 0..fan_out {
                for c in 0..fan_in {
                    w[(r, c)] = rng.gen_range(-bound..bound);
                }
            }
            weights.push(w);
            biases.push(DVector::zeros(fan_out));
        }
        Self { dims, weights, biases }
    }

    /// All-zero parameters; forward output is exactly sigmoid(0) = 0.5.
    pub fn zeros(input_dim: usize) -> Self {
        let mut model = Self::new_seeded(input_dim, 0);
        for w in &mut model.weights {
            w.fill(0.0);
        }
        model
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    /// Success probability for a single feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<f64, MlpError> {
        if features.len() != self.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim(),
                got: features.len(),
            });
        }
        let mut activation = DVector::from_column_slice(features);
        for layer in 0..self.layer_count() {
            let mut z = &self.weights[layer] * activation + &self.biases[layer];
            if layer + 1 < self.layer_count() {
                z.apply(|v| *v = v.max(0.0));
            }
            activation = z;
        }
        Ok(sigmoid(activation[0]))
    }

    /// Binary prediction at threshold 0.5; outputs of exactly 0.5 predict
    /// success.
    pub fn predict(&self, features: &[f64]) -> Result<bool, MlpError> {
        Ok(self.forward(features)? >= 0.5)
    }

    /// Batched forward pass. Columns of `inputs` are samples. Returns the
    /// pre-activations per layer and the output probabilities.
    fn forward_batch(&self, inputs: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
        let mut pre_activations = Vec::with_capacity(self.layer_count());
        let mut activation = inputs.clone();
        for layer in 0..self.layer_count() {
            let mut z = &self.weights[layer] * &activation;
            for mut column in z.column_iter_mut() {
                column += &self.biases[layer];
            }
            pre_activations.push(z.clone());
            if layer + 1 < self.layer_count() {
                z.apply(|v| *v = v.max(0.0));
            }
            activation = z;
        }
        let probabilities = activation.map(sigmoid);
        (pre_activations, probabilities)
    }

    /// Serializes to the versioned binary model format:
    /// magic `GCMLP\0`, u32 version, u32 layer-dim count, the dims as u32,
    /// then per layer the row-major weight matrix followed by the bias
    /// vector, all little-endian f64.
    pub fn save(&self, path: &Path) -> Result<(), MlpError> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MODEL_MAGIC);
        bytes.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        bytes.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for dim in &self.dims {
            bytes.extend_from_slice(&(*dim as u32).to_le_bytes());
        }
        for layer in 0..self.layer_count() {
            let w = &self.weights[layer];
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    bytes.extend_from_slice(&w[(r, c)].to_le_bytes());
                }
            }
            for v in self.biases[layer].iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut file = fs::File::create(path).map_err(|source| MlpError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        file.write_all(&bytes).map_err(|source| MlpError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, MlpError> {
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| MlpError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        let bad = |message: &str| MlpError::BadModelFile {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        let mut cursor = bytes.as_slice();
        let mut take = |n: usize| -> Result<&[u8], MlpError> {
            if cursor.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = cursor.split_at(n);
            cursor = tail;
            Ok(head)
        };
        if take(6)? != MODEL_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != MODEL_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let dim_count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if dim_count != HIDDEN_DIMS.len() + 2 {
            return Err(bad("unexpected layer-dim count"));
        }
        let mut dims = Vec::with_capacity(dim_count);
        for _ in 0..dim_count {
            dims.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
        }
        if dims[1..dims.len() - 1] != HIDDEN_DIMS || *dims.last().unwrap() != 1 {
            return Err(bad("hidden widths do not match 16-8-4-4-1"));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for layer in 0..dim_count - 1 {
            let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
            let mut w = DMatrix::zeros(fan_out, fan_in);
            for r in 0..fan_out {
                for c in 0..fan_in {
                    w[(r, c)] = f64::from_le_bytes(take(8)?.try_into().unwrap());
                }
            }
            let mut b = DVector::zeros(fan_out);
            for r in 0..fan_out {
                b[r] = f64::from_le_bytes(take(8)?.try_into().unwrap());
            }
            weights.push(w);
            biases.push(b);
        }
        if !cursor.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let model = Self { dims, weights, biases };
        if model
            .weights
            .iter()
            .any(|w| w.iter().any(|v| !v.is_finite()))
        {
            return Err(bad("non-finite parameter"));
        }
        Ok(model)
    }
}

/// Numerically stable sigmoid, clamped to the open interval so the output
/// contract (strictly between 0 and 1) survives f64 saturation.
fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Training hyperparameters. Defaults follow the training protocol:
/// 3000 epochs, cosine annealing 1e-3 → 1e-5, full-batch Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// 0 means full batch.
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3000,
            lr_start: 1e-3,
            lr_end: 1e-5,
            batch_size: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 7,
        }
    }
}

/// Cosine-annealed learning rate:
/// `lr(e) = lr_end + (lr_start - lr_end) (1 + cos(pi e / epochs)) / 2`.
///
/// The endpoints are returned exactly so schedules pin `lr(0) = lr_start`
/// and `lr(epochs) = lr_end` without floating-point residue.
pub fn cosine_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    debug_assert!(epoch <= cfg.epochs);
    if epoch == 0 {
        return cfg.lr_start;
    }
    if epoch >= cfg.epochs {
        return cfg.lr_end;
    }
    let progress = epoch as f64 / cfg.epochs as f64;
    cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Per-layer gradients, shaped like the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Mean binary cross-entropy over the batch plus its gradients, computed by
/// reverse-mode backpropagation. Probabilities are clamped to
/// `[PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP]` inside the log; in the
/// clamped regime the loss is locally constant, so the gradient there is
/// zero.
pub fn loss_and_gradient(
    model: &MlpModel,
    batch: &[TrainingSample],
) -> Result<(f64, Gradients), MlpError> {
    if batch.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let (inputs, labels) = batch_matrices(model.input_dim(), batch)?;
    Ok(loss_and_gradient_matrix(model, &inputs, &labels))
}

fn batch_matrices(
    input_dim: usize,
    batch: &[TrainingSample],
) -> Result<(DMatrix<f64>, DVector<f64>), MlpError> {
    let n = batch.len();
    let mut inputs = DMatrix::zeros(input_dim, n);
    let mut labels = DVector::zeros(n);
    for (col, sample) in batch.iter().enumerate() {
        if sample.features.len() != input_dim {
            return Err(MlpError::RaggedBatch {
                expected: input_dim,
                got: sample.features.len(),
            });
        }
        for (row, value) in sample.features.iter().enumerate() {
            inputs[(row, col)] = *value;
        }
        labels[col] = if sample.label { 1.0 } else { 0.0 };
    }
    Ok((inputs, labels))
}

fn loss_and_gradient_matrix(
    model: &MlpModel,
    inputs: &DMatrix<f64>,
    labels: &DVector<f64>,
) -> (f64, Gradients) {
    let n = inputs.ncols();
    let layer_count = model.layer_count();
    let (pre_activations, probabilities) = model.forward_batch(inputs);

    let lo = PROBABILITY_CLAMP;
    let hi = 1.0 - PROBABILITY_CLAMP;
    let mut loss = 0.0;
    // Delta at the output pre-activation: (p - y)/n inside the clamp window,
    // zero where the clamp froze the loss.
    let mut delta = DMatrix::zeros(1, n);
    for col in 0..n {
        let p = probabilities[(0, col)];
        let y = labels[col];
        let clamped = p.clamp(lo, hi);
        loss += -(y * clamped.ln() + (1.0 - y) * (1.0 - clamped).ln());
        delta[(0, col)] = if p > lo && p < hi { (p - y) / n as f64 } else { 0.0 };
    }
    loss /= n as f64;

    let mut weight_grads: Vec<DMatrix<f64>> = Vec::with_capacity(layer_count);
    let mut bias_grads: Vec<DVector<f64>> = Vec::with_capacity(layer_count);
    for layer in (0..layer_count).rev() {
        let upstream: DMatrix<f64> = if layer == 0 {
            inputs.clone()
        } else {
            pre_activations[layer - 1].map(|v| v.max(0.0))
        };
        weight_grads.push(&delta * upstream.transpose());
        let mut bias = DVector::zeros(delta.nrows());
        for row in 0..delta.nrows() {
            bias[row] = delta.row(row).sum();
        }
        bias_grads.push(bias);
        if layer > 0 {
            let mut back = model.weights[layer].transpose() * &delta;
            let z = &pre_activations[layer - 1];
            for r in 0..back.nrows() {
                for c in 0..back.ncols() {
                    if z[(r, c)] <= 0.0 {
                        back[(r, c)] = 0.0;
                    }
                }
            }
            delta = back;
        }
    }
    weight_grads.reverse();
    bias_grads.reverse();
    (
        loss,
        Gradients {
            weights: weight_grads,
            biases: bias_grads,
        },
    )
}

/// Central-finite-difference verification of [`loss_and_gradient`] over
/// every parameter of the model.
///
/// Returns the worst relative deviation between the analytic gradient and
/// the central difference `(L(θ+h) - L(θ-h)) / 2h`, or `None` when the
/// batch lands within a guard band of a ReLU kink or the loss clamp: the
/// loss is not differentiable there, so the comparison is meaningless.
pub fn gradient_check(
    model: &MlpModel,
    batch: &[TrainingSample],
    step: f64,
) -> Result<Option<f64>, MlpError> {
    if batch.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let (inputs, _) = batch_matrices(model.input_dim(), batch)?;
    let (pre_activations, probabilities) = model.forward_batch(&inputs);
    let kink_guard = 1e-3;
    for z in pre_activations.iter().take(model.layer_count() - 1) {
        if z.iter().any(|v| v.abs() < kink_guard) {
            return Ok(None);
        }
    }
    let (lo, hi) = (PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    if probabilities
        .iter()
        .any(|p| (p - lo).abs() < 1e-6 || (p - hi).abs() < 1e-6)
    {
        return Ok(None);
    }

    let (_, grads) = loss_and_gradient(model, batch)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut check = |probe: &mut MlpModel,
                     set: &mut dyn FnMut(&mut MlpModel, f64),
                     original: f64,
                     analytic: f64|
     -> Result<(), MlpError> {
        set(probe, original + step);
        let (loss_plus, _) = loss_and_gradient(probe, batch)?;
        set(probe, original - step);
        let (loss_minus, _) = loss_and_gradient(probe, batch)?;
        set(probe, original);
        let fd = (loss_plus - loss_minus) / (2.0 * step);
        let denom = analytic.abs().max(fd.abs());
        let rel = if denom > 1e-7 {
            (analytic - fd).abs() / denom
        } else {
            (analytic - fd).abs()
        };
        worst = worst.max(rel);
        Ok(())
    };
    for layer in 0..model.layer_count() {
        for r in 0..model.weights[layer].nrows() {
            for c in 0..model.weights[layer].ncols() {
                let original = model.weights[layer][(r, c)];
                let analytic = grads.weights[layer][(r, c)];
                check(
                    &mut probe,
                    &mut |m, v| m.weights[layer][(r, c)] = v,
                    original,
                    analytic,
                )?;
            }
        }
        for r in 0..model.biases[layer].nrows() {
            let original = model.biases[layer][r];
            let analytic = grads.biases[layer][r];
            check(&mut probe, &mut |m, v| m.biases[layer][r] = v, original, analytic)?;
        }
    }
    Ok(Some(worst))
}

/// Fraction of samples whose thresholded prediction matches the label.
pub fn accuracy_of(model: &MlpModel, samples: &[TrainingSample]) -> Result<f64, MlpError> {
    if samples.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let mut correct = 0usize;
    for sample in samples {
        if model.predict(&sample.features)? == sample.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

fn accuracy_matrix(model: &MlpModel, inputs: &DMatrix<f64>, labels: &DVector<f64>) -> f64 {
    let (_, probabilities) = model.forward_batch(inputs);
    let mut correct = 0usize;
    for col in 0..inputs.ncols() {
        let predicted = probabilities[(0, col)] >= 0.5;
        if predicted == (labels[col] == 1.0) {
            correct += 1;
        }
    }
    correct as f64 / inputs.ncols() as f64
}

/// Snapshot of the best-so-far model during training.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub epoch: usize,
    pub test_accuracy: f64,
    pub parameters: MlpModel,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the final epoch.
    pub final_model: MlpModel,
    /// The best-test-accuracy checkpoint (earliest epoch on ties).
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

struct AdamState {
    m_weights: Vec<DMatrix<f64>>,
    v_weights: Vec<DMatrix<f64>>,
    m_biases: Vec<DVector<f64>>,
    v_biases: Vec<DVector<f64>>,
    step: u64,
}

impl AdamState {
    fn new(model: &MlpModel) -> Self {
        Self {
            m_weights: model.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
            v_weights: model.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
            m_biases: model.biases.iter().map(|b| DVector::zeros(b.nrows())).collect(),
            v_biases: model.biases.iter().map(|b| DVector::zeros(b.nrows())).collect(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64, cfg: &TrainConfig) {
        self.step += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for layer in 0..model.layer_count() {
            adam_apply(
                &mut model.weights[layer],
                &mut self.m_weights[layer],
                &mut self.v_weights[layer],
                &grads.weights[layer],
                lr,
                cfg,
                bias1,
                bias2,
            );
            adam_apply_vec(
                &mut model.biases[layer],
                &mut self.m_biases[layer],
                &mut self.v_biases[layer],
                &grads.biases[layer],
                lr,
                cfg,
                bias1,
                bias2,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_apply(
    param: &mut DMatrix<f64>,
    m: &mut DMatrix<f64>,
    v: &mut DMatrix<f64>,
    grad: &DMatrix<f64>,
    lr: f64,
    cfg: &TrainConfig,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..param.nrows() {
        for j in 0..param.ncols() {
            let g = grad[(i, j)];
            m[(i, j)] = cfg.beta1 * m[(i, j)] + (1.0 - cfg.beta1) * g;
            v[(i, j)] = cfg.beta2 * v[(i, j)] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[(i, j)] / bias1;
            let v_hat = v[(i, j)] / bias2;
            param[(i, j)] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_apply_vec(
    param: &mut DVector<f64>,
    m: &mut DVector<f64>,
    v: &mut DVector<f64>,
    grad: &DVector<f64>,
    lr: f64,
    cfg: &TrainConfig,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..param.nrows() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Trains a fresh model and returns the final parameters, the
/// best-test-accuracy checkpoint, and the per-epoch log.
pub fn train(
    train_set: &[TrainingSample],
    test_set: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, MlpError> {
    if train_set.is_empty() {
        return Err(MlpError::EmptyTrainSet);
    }
    if test_set.is_empty() {
        return Err(MlpError::EmptyTestSet);
    }
    let input_dim = train_set[0].features.len();
    let (train_inputs, train_labels) = batch_matrices(input_dim, train_set)?;
    let (test_inputs, test_labels) = batch_matrices(input_dim, test_set)?;

    let mut model = MlpModel::new_seeded(input_dim, cfg.seed);
    let mut adam = AdamState::new(&model);
    let mut order_rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, "batch-order"));
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut checkpoint: Option<Checkpoint> = None;

    let n = train_set.len();
    let batch_size = if cfg.batch_size == 0 || cfg.batch_size >= n {
        n
    } else {
        cfg.batch_size
    };

    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(epoch, cfg);
        let loss = if batch_size == n {
            let (loss, grads) = loss_and_gradient_matrix(&model, &train_inputs, &train_labels);
            adam.update(&mut model, &grads, lr, cfg);
            loss
        } else {
            let mut order: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            order.shuffle(&mut order_rng);
            let mut weighted_loss = 0.0;
            for chunk in order.chunks(batch_size) {
                let mut inputs = DMatrix::zeros(input_dim, chunk.len());
                let mut labels = DVector::zeros(chunk.len());
                for (col, &idx) in chunk.iter().enumerate() {
                    inputs.set_column(col, &train_inputs.column(idx));
                    labels[col] = train_labels[idx];
                }
                let (loss, grads) = loss_and_gradient_matrix(&model, &inputs, &labels);
                adam.update(&mut model, &grads, lr, cfg);
                weighted_loss += loss * chunk.len() as f64;
            }
            weighted_loss / n as f64
        };

        let train_accuracy = accuracy_matrix(&model, &train_inputs, &train_labels);
        let test_accuracy = accuracy_matrix(&model, &test_inputs, &test_labels);
        log.push(EpochLog {
            epoch,
            lr,
            loss,
            train_accuracy,
            test_accuracy,
        });
        let improved = match &checkpoint {
            Some(best) => test_accuracy > best.test_accuracy,
            None => true,
        };
        if improved {
            checkpoint = Some(Checkpoint {
                epoch,
                test_accuracy,
                parameters: model.clone(),
            });
        }
    }

    Ok(TrainOutcome {
        final_model: model,
        checkpoint: checkpoint.expect("epochs > 0 guarantees a checkpoint"),
        log,
    })
}

/// Writes the training log as `epoch,lr,loss,train_acc,test_acc` CSV.
pub fn write_training_log(log: &[EpochLog], path: &Path) -> Result<(), MlpError> {
    let mut out = String::from("epoch,lr,loss,train_acc,test_acc\n");
    for row in log {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.epoch, row.lr, row.loss, row.train_accuracy, row.test_accuracy
        ));
    }
    fs::write(path, out).map_err(|source| MlpError::Io {
        path: path.to_path_buf(),
        source,
    })
}
