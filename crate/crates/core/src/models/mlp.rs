use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fit_scaler, Feature, FeatureSchema, Predictor, Standardizer};
use crate::data::ScadaRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Logistic,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Logistic => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate_init: f64,
    pub max_epochs: usize,
    /// Minimum loss improvement that counts as progress.
    pub tol: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Learning-rate divisor after `lr_patience` epochs without training
    /// improvement.
    pub lr_divisor: f64,
    pub lr_patience: usize,
    /// Training stops once the learning rate decays below this.
    pub min_learning_rate: f64,
    /// Full-batch training up to this many rows, mini-batches above.
    pub full_batch_max_rows: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self::ann_small()
    }
}

impl MlpConfig {
    fn with_layers(hidden: Vec<usize>, activation: Activation) -> Self {
        Self {
            hidden,
            activation,
            learning_rate_init: 0.1,
            max_epochs: 10_000,
            tol: 1e-6,
            patience: 100,
            lr_divisor: 5.0,
            lr_patience: 10,
            min_learning_rate: 1e-6,
            full_batch_max_rows: 5000,
            batch_size: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Two logistic hidden layers of three units.
    pub fn ann_small() -> Self {
        Self::with_layers(vec![3, 3], Activation::Logistic)
    }

    /// Three ReLU hidden layers (100, 100, 25).
    pub fn ann_large() -> Self {
        Self::with_layers(vec![100, 100, 25], Activation::Relu)
    }
}

/// Dense layer computing `a · W + b`, with `W` of shape (inputs, outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStopping,
    LearningRateFloor,
    MaxEpochs,
    NotTrained,
}

/// Losses are half mean squared error on the standardised target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
}

impl TrainingHistory {
    fn empty() -> Self {
        Self {
            epochs: Vec::new(),
            best_epoch: 0,
            best_val_loss: f64::INFINITY,
            stop_reason: StopReason::NotTrained,
        }
    }

    /// `epoch,train_loss,val_loss` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
        }
        s
    }
}

/// Fully connected regression network with a linear output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub schema: FeatureSchema,
    pub input_scaler: Standardizer,
    pub target_mean: f64,
    pub target_std: f64,
    pub activation: Activation,
    pub layers: Vec<Layer>,
    pub history: TrainingHistory,
}

/// Outcome of comparing backpropagated gradients with finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Smallest |pre-activation| over hidden units at the checked input;
    /// ReLU checks are only meaningful away from zero.
    pub min_abs_preactivation: f64,
}

struct Gradients {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

impl MlpModel {
    /// Randomly initialised network (uniform Glorot weights, zero biases).
    pub fn init(
        schema: FeatureSchema,
        input_scaler: Standardizer,
        target_mean: f64,
        target_std: f64,
        hidden: &[usize],
        activation: Activation,
        seed: u64,
    ) -> Self {
        let mut rng = crate::rng::stream(seed, 0);
        let mut sizes = vec![schema.len()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit)),
                    biases: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self {
            schema,
            input_scaler,
            target_mean,
            target_std,
            activation,
            layers,
            history: TrainingHistory::empty(),
        }
    }

    /// Forward pass on one standardised row with a fixed summation order.
    fn forward_scaled(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (n_in, n_out) = layer.weights.dim();
            let mut next = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let mut z = layer.biases[j];
                for i in 0..n_in {
                    z += a[i] * layer.weights[[i, j]];
                }
                next.push(if l == last { z } else { self.activation.apply(z) });
            }
            a = next;
        }
        a[0]
    }

    /// Batched forward pass; returns the activations of every layer, input
    /// first and linear output last.
    fn forward_batch(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weights);
            z += &layer.biases;
            if l != last {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            acts.push(z);
        }
        acts
    }

    /// Gradients of `0.5 · mean((ŷ − y)²)` over a standardised batch.
    fn backward(&self, acts: &[Array2<f64>], y: &Array1<f64>) -> (f64, Gradients) {
        let n = y.len() as f64;
        let out = acts.last().expect("at least one layer").column(0).to_owned();
        let err = &out - y;
        let loss = 0.5 * err.dot(&err) / n;
        let mut delta = (err / n).insert_axis(Axis(1));
        let mut gw = Vec::with_capacity(self.layers.len());
        let mut gb = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            gw.push(acts[l].t().dot(&delta));
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights.t());
                let act = self.activation;
                back.zip_mut_with(&acts[l], |d, &a| *d *= act.derivative(a));
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    fn half_mse(&self, x: ArrayView2<f64>, y: &Array1<f64>) -> f64 {
        let acts = self.forward_batch(x);
        let err = &acts.last().expect("output").column(0) - y;
        0.5 * err.dot(&err) / y.len() as f64
    }

    fn scale_target(&self, power: f64) -> f64 {
        (power - self.target_mean) / self.target_std
    }

    /// Compares backpropagation with central finite differences of step `h`
    /// for the squared error at one physical-unit sample.
    pub fn gradient_check(&self, x: &[f64], target: f64, h: f64) -> GradientCheck {
        let xs = self.input_scaler.apply(x);
        let ys = self.scale_target(target);
        let row = Array2::from_shape_vec((1, xs.len()), xs.clone()).expect("row shape");
        let acts = self.forward_batch(row.view());
        let (_, grads) = self.backward(&acts, &Array1::from_elem(1, ys));

        let mut min_pre = f64::INFINITY;
        {
            let mut a = xs.clone();
            for layer in &self.layers[..self.layers.len() - 1] {
                let (n_in, n_out) = layer.weights.dim();
                let mut next = Vec::with_capacity(n_out);
                for j in 0..n_out {
                    let mut z = layer.biases[j];
                    for i in 0..n_in {
                        z += a[i] * layer.weights[[i, j]];
                    }
                    min_pre = min_pre.min(z.abs());
                    next.push(self.activation.apply(z));
                }
                a = next;
            }
        }

        let loss_at = |m: &MlpModel| {
            let e = m.forward_scaled(&xs) - ys;
            0.5 * e * e
        };
        let rel =
            |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        let mut probe = self.clone();
        let mut worst: f64 = 0.0;
        for l in 0..self.layers.len() {
            for (idx, &g) in grads.weights[l].indexed_iter() {
                let orig = probe.layers[l].weights[idx];
                probe.layers[l].weights[idx] = orig + h;
                let up = loss_at(&probe);
                probe.layers[l].weights[idx] = orig - h;
                let down = loss_at(&probe);
                probe.layers[l].weights[idx] = orig;
                worst = worst.max(rel(g, (up - down) / (2.0 * h)));
            }
            for (j, &g) in grads.biases[l].iter().enumerate() {
                let orig = probe.layers[l].biases[j];
                probe.layers[l].biases[j] = orig + h;
                let up = loss_at(&probe);
                probe.layers[l].biases[j] = orig - h;
                let down = loss_at(&probe);
                probe.layers[l].biases[j] = orig;
                worst = worst.max(rel(g, (up - down) / (2.0 * h)));
            }
        }
        GradientCheck {
            max_relative_error: worst,
            min_abs_preactivation: min_pre,
        }
    }
}

impl Predictor for MlpModel {
    fn features(&self) -> &[Feature] {
        &self.schema.features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let z = self.input_scaler.apply(x);
        self.forward_scaled(&z) * self.target_std + self.target_mean
    }
}

struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    t: i32,
}

impl AdamState {
    fn new(layers: &[Layer]) -> Self {
        Self {
            m_w: layers.iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
            v_w: layers.iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
            m_b: layers.iter().map(|l| Array1::zeros(l.biases.len())).collect(),
            v_b: layers.iter().map(|l| Array1::zeros(l.biases.len())).collect(),
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [Layer], g: &Gradients, lr: f64, cfg: &MlpConfig) {
        self.t += 1;
        let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);
        let step = lr * (1.0 - b2.powi(self.t)).sqrt() / (1.0 - b1.powi(self.t));
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, grad: f64| {
            *m = b1 * *m + (1.0 - b1) * grad;
            *v = b2 * *v + (1.0 - b2) * grad * grad;
            *p -= step * *m / (v.sqrt() + eps);
        };
        for (l, layer) in layers.iter_mut().enumerate() {
            ndarray::Zip::from(&mut layer.weights)
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&g.weights[l])
                .for_each(|p, m, v, &gr| update(p, m, v, gr));
            ndarray::Zip::from(&mut layer.biases)
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&g.biases[l])
                .for_each(|p, m, v, &gr| update(p, m, v, gr));
        }
    }
}

fn design(model: &MlpModel, records: &[ScadaRecord]) -> (Array2<f64>, Array1<f64>) {
    let d = model.schema.len();
    let mut x = Array2::zeros((records.len(), d));
    for (i, r) in records.iter().enumerate() {
        let z = model.input_scaler.apply(&model.schema.row(r));
        for j in 0..d {
            x[[i, j]] = z[j];
        }
    }
    let y = records.iter().map(|r| model.scale_target(r.power)).collect();
    (x, y)
}

/// Trains a network with Adam on standardised inputs and target.
///
/// The learning rate is divided by `lr_divisor` whenever the epoch training
/// loss fails to improve on the best so far by `tol` for `lr_patience`
/// consecutive epochs.
/// Training stops when the validation loss has not improved by `tol` for
/// `patience` epochs, and the best-validation parameters are restored.
pub fn mlp_train(
    config: &MlpConfig,
    schema: &FeatureSchema,
    train: &[ScadaRecord],
    val: &[ScadaRecord],
    seed: u64,
) -> Result<MlpModel> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyData("MLP training needs train and validation rows".into()));
    }
    if config.hidden.contains(&0) {
        return Err(Error::InvalidInput("hidden layers must have at least one unit".into()));
    }
    let names: Vec<&str> = schema.features.iter().map(|f| f.name()).collect();
    let input_scaler = fit_scaler(&schema.rows(train), &names)?;
    let powers: Vec<f64> = train.iter().map(|r| r.power).collect();
    let target_std = crate::stats::std(&powers);
    if !(target_std > 0.0) {
        return Err(Error::ZeroVariance("power".into()));
    }
    let mut model = MlpModel::init(
        schema.clone(),
        input_scaler,
        crate::stats::mean(&powers),
        target_std,
        &config.hidden,
        config.activation,
        seed,
    );
    let (x_train, y_train) = design(&model, train);
    let (x_val, y_val) = design(&model, val);
    let n = train.len();
    let batch = if n <= config.full_batch_max_rows {
        n
    } else {
        config.batch_size.max(1)
    };

    let mut adam = AdamState::new(&model.layers);
    let mut lr = config.learning_rate_init;
    let mut best_train = f64::INFINITY;
    let mut train_stall = 0;
    let mut best_val = f64::INFINITY;
    let mut best_layers = model.layers.clone();
    let mut best_epoch = 0;
    let mut val_stall = 0;
    let mut history = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 1..=config.max_epochs {
        if batch < n {
            order.shuffle(&mut crate::rng::sub_stream(seed, 7, epoch as u64));
        }
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch) {
            let (xb, yb) = if batch < n {
                (x_train.select(Axis(0), chunk), y_train.select(Axis(0), chunk))
            } else {
                (x_train.clone(), y_train.clone())
            };
            let acts = model.forward_batch(xb.view());
            let (loss, grads) = model.backward(&acts, &yb);
            loss_sum += loss * chunk.len() as f64;
            adam.step(&mut model.layers, &grads, lr, config);
        }
        let train_loss = loss_sum / n as f64;
        let val_loss = model.half_mse(x_val.view(), &y_val);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("train loss {train_loss}, validation loss {val_loss}, learning rate {lr}"),
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            learning_rate: lr,
        });

        if train_loss > best_train - config.tol {
            train_stall += 1;
        } else {
            train_stall = 0;
        }
        best_train = best_train.min(train_loss);
        if train_stall >= config.lr_patience {
            lr /= config.lr_divisor;
            train_stall = 0;
        }

        if val_loss < best_val - config.tol {
            val_stall = 0;
        } else {
            val_stall += 1;
        }
        if val_loss < best_val {
            best_val = val_loss;
            best_layers = model.layers.clone();
            best_epoch = epoch;
        }
        if val_stall >= config.patience {
            stop = StopReason::EarlyStopping;
            break;
        }
        if lr < config.min_learning_rate {
            stop = StopReason::LearningRateFloor;
            break;
        }
    }

    model.layers = best_layers;
    model.history = TrainingHistory {
        epochs: history,
        best_epoch,
        best_val_loss: best_val,
        stop_reason: stop,
    };
    Ok(model)
}
