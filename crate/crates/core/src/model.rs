//! Dense feed-forward binary classifier.
//!
//! Hidden layers use ReLU with inverted dropout, the output is a single
//! sigmoid unit, and the loss is mean binary cross-entropy with probability
//! clamping at 1e-12. Training runs Adam over shuffled mini-batches with
//! early stopping on the best validation AUROC. Everything is f64 so
//! finite-difference gradient checks are meaningful.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{auroc, Dataset};
use crate::seeds::{self, streams};

/// Probability clamp used inside the cross-entropy so the loss stays finite.
pub const PROB_CLAMP: f64 = 1e-12;

/// Architecture and training hyperparameters of one model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_hidden_layers: usize,
    /// Uniform width across hidden layers.
    pub neurons_per_layer: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_hidden_layers < 1 {
            return Err(Error::InvalidInput("n_hidden_layers must be >= 1".into()));
        }
        if self.neurons_per_layer < 1 {
            return Err(Error::InvalidInput("neurons_per_layer must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 1 || self.max_epochs < 1 || self.patience < 1 {
            return Err(Error::InvalidInput(
                "batch_size, max_epochs, and patience must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One epoch of training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auroc: f64,
}

/// Per-layer gradients, shaped like the weights.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// A dense feed-forward model. Immutable after training; concurrent
/// read-only prediction is safe.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub input_dim: usize,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    pub history: Vec<EpochStats>,
}

impl TrainedModel {
    /// Validated construction from raw parts (deserialization, tests).
    /// Layer shapes must chain input_dim -> neurons^(n_hidden_layers) -> 1.
    pub fn from_parts(
        config: ModelConfig,
        input_dim: usize,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        history: Vec<EpochStats>,
    ) -> Result<Self> {
        config.validate()?;
        let dims = layer_dims(&config, input_dim);
        if weights.len() != dims.len() || biases.len() != dims.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} layers, got {} weight and {} bias tensors",
                dims.len(),
                weights.len(),
                biases.len()
            )));
        }
        for (l, &(d_in, d_out)) in dims.iter().enumerate() {
            if weights[l].dim() != (d_in, d_out) || biases[l].len() != d_out {
                return Err(Error::InvalidInput(format!(
                    "layer {l} has shape {:?}/{}, expected ({d_in}, {d_out})",
                    weights[l].dim(),
                    biases[l].len()
                )));
            }
        }
        if weights.iter().any(|w| w.iter().any(|v| !v.is_finite()))
            || biases.iter().any(|b| b.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite model weights".into()));
        }
        Ok(Self {
            config,
            input_dim,
            weights,
            biases,
            history,
        })
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(Error::InvalidInput(format!(
                "input has {} features, model expects {}",
                x.ncols(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Inference-mode probabilities (no dropout).
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_input(&x)?;
        Ok(self.forward(&x, None).1)
    }

    /// Train-mode forward pass: fresh inverted-dropout masks are drawn from
    /// `rng` for every hidden layer.
    pub fn forward_dropout(&self, x: ArrayView2<f64>, rng: &mut ChaCha8Rng) -> Result<Array1<f64>> {
        self.check_input(&x)?;
        let masks = self.sample_masks(x.nrows(), rng);
        Ok(self.forward(&x, masks.as_deref()).1)
    }

    fn sample_masks(&self, n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Array2<f64>>> {
        let p = self.config.dropout_rate;
        if p == 0.0 {
            return None;
        }
        let scale = 1.0 / (1.0 - p);
        let masks = (0..self.config.n_hidden_layers)
            .map(|_| {
                Array2::from_shape_fn((n, self.config.neurons_per_layer), |_| {
                    if rng.random::<f64>() < p {
                        0.0
                    } else {
                        scale
                    }
                })
            })
            .collect();
        Some(masks)
    }

    /// Returns the post-activation hidden layers and the output probabilities.
    fn forward(
        &self,
        x: &ArrayView2<f64>,
        masks: Option<&[Array2<f64>]>,
    ) -> (Vec<Array2<f64>>, Array1<f64>) {
        let n_hidden = self.config.n_hidden_layers;
        let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(n_hidden);
        let mut a = x.to_owned();
        for l in 0..n_hidden {
            let mut z = a.dot(&self.weights[l]);
            z += &self.biases[l];
            z.mapv_inplace(|v| v.max(0.0));
            if let Some(masks) = masks {
                z *= &masks[l];
            }
            hidden.push(z.clone());
            a = z;
        }
        let mut z_out = a.dot(&self.weights[n_hidden]);
        z_out += &self.biases[n_hidden];
        let probs = z_out.index_axis(Axis(1), 0).mapv(sigmoid);
        (hidden, probs)
    }
}

fn layer_dims(config: &ModelConfig, input_dim: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(config.n_hidden_layers + 1);
    let mut d_in = input_dim;
    for _ in 0..config.n_hidden_layers {
        dims.push((d_in, config.neurons_per_layer));
        d_in = config.neurons_per_layer;
    }
    dims.push((d_in, 1));
    dims
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Glorot-uniform weights and zero biases, deterministic under `config.seed`.
pub fn init_model(config: &ModelConfig, input_dim: usize) -> Result<TrainedModel> {
    config.validate()?;
    if input_dim < 1 {
        return Err(Error::InvalidInput("input_dim must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dims = layer_dims(config, input_dim);
    let mut weights = Vec::with_capacity(dims.len());
    let mut biases = Vec::with_capacity(dims.len());
    for &(d_in, d_out) in &dims {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        weights.push(Array2::from_shape_fn((d_in, d_out), |_| {
            rng.random_range(-bound..bound)
        }));
        biases.push(Array1::zeros(d_out));
    }
    TrainedModel::from_parts(config.clone(), input_dim, weights, biases, Vec::new())
}

/// Mean binary cross-entropy with 1e-12 clamping, plus gradients by
/// backpropagation. Dropout is not applied: this is the deterministic,
/// inference-path loss used by gradient checks and external callers; the
/// training loop passes explicit masks through the internal variant.
pub fn loss_and_gradients(
    model: &TrainedModel,
    x: ArrayView2<f64>,
    y: &[u8],
) -> Result<(f64, Gradients)> {
    loss_and_gradients_impl(model, x, y, None)
}

fn loss_and_gradients_impl(
    model: &TrainedModel,
    x: ArrayView2<f64>,
    y: &[u8],
    masks: Option<&[Array2<f64>]>,
) -> Result<(f64, Gradients)> {
    model.check_input(&x)?;
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} rows",
            y.len(),
            n
        )));
    }

    let (hidden, probs) = model.forward(&x, masks);
    let n_hidden = model.config.n_hidden_layers;

    let mut loss = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let p = probs[i].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    loss /= n as f64;

    // delta for the fused sigmoid + BCE output layer: (p - y) / N.
    let mut delta = Array2::<f64>::zeros((n, 1));
    for i in 0..n {
        delta[(i, 0)] = (probs[i] - y[i] as f64) / n as f64;
    }

    let mut grad_w: Vec<Array2<f64>> = vec![Array2::zeros((0, 0)); n_hidden + 1];
    let mut grad_b: Vec<Array1<f64>> = vec![Array1::zeros(0); n_hidden + 1];

    let mut upstream = delta;
    for l in (0..=n_hidden).rev() {
        let input: ArrayView2<f64> = if l == 0 { x } else { hidden[l - 1].view() };
        grad_w[l] = input.t().dot(&upstream);
        grad_b[l] = upstream.sum_axis(Axis(0));
        if l > 0 {
            let mut back = upstream.dot(&model.weights[l].t());
            // Through the dropout mask and the ReLU gate. `hidden` holds
            // post-mask activations h = mask * relu(z); h > 0 exactly when
            // the unit was kept and active, since the mask scale is positive.
            match masks {
                None => {
                    ndarray::Zip::from(&mut back)
                        .and(&hidden[l - 1])
                        .for_each(|g, &h| {
                            if h <= 0.0 {
                                *g = 0.0;
                            }
                        });
                }
                Some(masks) => {
                    ndarray::Zip::from(&mut back)
                        .and(&hidden[l - 1])
                        .and(&masks[l - 1])
                        .for_each(|g, &h, &m| {
                            *g = if h > 0.0 { *g * m } else { 0.0 };
                        });
                }
            }
            upstream = back;
        }
    }

    Ok((
        loss,
        Gradients {
            weights: grad_w,
            biases: grad_b,
        },
    ))
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: usize,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl Adam {
    fn new(model: &TrainedModel, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m_w: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_w: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_b: model.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_b: model.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    fn step(&mut self, model: &mut TrainedModel, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for l in 0..model.weights.len() {
            update_tensor(
                &mut model.weights[l],
                &grads.weights[l],
                &mut self.m_w[l],
                &mut self.v_w[l],
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                bc1,
                bc2,
            );
            update_vector(
                &mut model.biases[l],
                &grads.biases[l],
                &mut self.m_b[l],
                &mut self.v_b[l],
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                bc1,
                bc2,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn update_tensor(
    w: &mut Array2<f64>,
    g: &Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    });
}

#[allow(clippy::too_many_arguments)]
fn update_vector(
    w: &mut Array1<f64>,
    g: &Array1<f64>,
    m: &mut Array1<f64>,
    v: &mut Array1<f64>,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    });
}

/// Train with Adam on shuffled mini-batches, early-stopping on the best
/// validation AUROC with the configured patience (stop once the count of
/// epochs since the best exceeds `patience`). Returns the weights from the
/// best-validation epoch; `history` records every epoch that ran.
pub fn train(model: TrainedModel, train: &Dataset, val: &Dataset) -> Result<TrainedModel> {
    let mut model = model;
    if train.n_features() != model.input_dim || val.n_features() != model.input_dim {
        return Err(Error::InvalidInput(format!(
            "feature dimension mismatch: model {}, train {}, val {}",
            model.input_dim,
            train.n_features(),
            val.n_features()
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }

    let config = model.config.clone();
    let mut shuffle_rng =
        ChaCha8Rng::seed_from_u64(seeds::derive(config.seed, streams::TRAIN_SHUFFLE));
    let mut dropout_rng =
        ChaCha8Rng::seed_from_u64(seeds::derive(config.seed, streams::TRAIN_DROPOUT));
    let mut adam = Adam::new(&model, config.learning_rate);

    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<Array2<f64>>, Vec<Array1<f64>>)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = train.features.select(Axis(0), batch);
            let y: Vec<u8> = batch.iter().map(|&i| train.labels[i]).collect();
            let masks = model.sample_masks(batch.len(), &mut dropout_rng);
            let (loss, grads) = loss_and_gradients_impl(&model, x.view(), &y, masks.as_deref())?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(&mut model, &grads);
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite()
            || model.weights.iter().any(|w| w.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::TrainingDiverged { epoch });
        }

        let val_scores = model.predict_proba(val.features.view())?;
        let val_auroc = auroc(&val.labels, val_scores.as_slice().expect("contiguous"))?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss,
            val_auroc,
        });

        if best.as_ref().is_none_or(|(b, _, _)| val_auroc > *b) {
            best = Some((val_auroc, model.weights.clone(), model.biases.clone()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best > config.patience {
                break;
            }
        }
    }

    if let Some((_, w, b)) = best {
        model.weights = w;
        model.biases = b;
    }
    model.history = history;
    Ok(model)
}
