use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::model::{bce_with_logit, sigmoid, GatModel};
use super::scalar::Scalar;
use super::{features_as, loss_and_grad};
use crate::taskgen::LabeledExpansion;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without an improvement of at least `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    /// Input values of training items are redrawn after every this many
    /// epochs; zero disables resampling.
    pub resample_every: usize,
    /// Example rows averaged when evaluating an item.
    pub eval_rows: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 1000,
            patience: 50,
            min_delta: 1e-4,
            resample_every: 50,
            eval_rows: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("item {item} has an empty expansion front")]
    EmptyFront { item: usize },
    #[error("non-finite loss on training item {item} in epoch {epoch}")]
    NonFiniteLoss { item: usize, epoch: usize },
}

/// Adam optimizer state; moments mirror the parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub m: GatModel<T>,
    pub v: GatModel<T>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &GatModel<T>, cfg: &TrainConfig) -> Self {
        AdamState {
            m: GatModel::zeros(model.dims),
            v: GatModel::zeros(model.dims),
            step: 0,
            learning_rate: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
        }
    }

    pub fn update(&mut self, model: &mut GatModel<T>, grads: &GatModel<T>) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - libm::pow(b1, self.step as f64);
        let c2 = 1.0 - libm::pow(b2, self.step as f64);
        for t in 0..model.tensors.len() {
            let (p, g) = (&mut model.tensors[t], &grads.tensors[t]);
            let (m, v) = (&mut self.m.tensors[t], &mut self.v.tensors[t]);
            for i in 0..p.len() {
                let gi = g[i].to_f64();
                let mi = b1 * m[i].to_f64() + (1.0 - b1) * gi;
                let vi = b2 * v[i].to_f64() + (1.0 - b2) * gi * gi;
                m[i] = T::from_f64(mi);
                v[i] = T::from_f64(vi);
                let step = self.learning_rate * (mi / c1) / (libm::sqrt(vi / c2) + self.epsilon);
                p[i] = T::from_f64(p[i].to_f64() - step);
            }
        }
    }
}

/// Loss and thresholded accuracy of a model over a set of items.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Evaluation {
    /// Mean over items of the per-item mean front BCE.
    pub loss: f64,
    /// Fraction of front nodes whose averaged saliency falls on the correct
    /// side of 0.5.
    pub accuracy: f64,
    pub nodes: usize,
    pub positives: usize,
}

impl Evaluation {
    pub fn positive_rate(&self) -> f64 {
        if self.nodes == 0 {
            0.0
        } else {
            self.positives as f64 / self.nodes as f64
        }
    }

    /// Accuracy of always predicting the more frequent class.
    pub fn majority_baseline(&self) -> f64 {
        let p = self.positive_rate();
        p.max(1.0 - p)
    }
}

/// Evaluates each item on its first `rows` example rows: the loss is the
/// per-row BCE averaged over rows and front nodes, the accuracy thresholds
/// the row-averaged saliency at 0.5.
pub fn evaluate<T: Scalar>(model: &GatModel<T>, items: &[LabeledExpansion], rows: usize) -> Evaluation {
    let mut ev = Evaluation::default();
    if items.is_empty() {
        return ev;
    }
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for item in items {
        let front = &item.layout.front;
        let k = rows.clamp(1, item.task.len());
        let mut probs = vec![0.0; front.len()];
        let mut item_loss = 0.0;
        for j in 0..k {
            let x = features_as::<T>(&item.graph, &item.layout, j, &item.task);
            let logits = model.logits(&x, item.layout.adjacency());
            for (f, (&node, &t)) in front.iter().zip(&item.targets).enumerate() {
                let z = logits[node].to_f64();
                item_loss += bce_with_logit(z, t);
                probs[f] += sigmoid(z);
            }
        }
        loss_sum += item_loss / (k * front.len()) as f64;
        for (p, &t) in probs.iter().zip(&item.targets) {
            let predicted = p / k as f64 >= 0.5;
            if predicted == (t >= 0.5) {
                correct += 1;
            }
            if t >= 0.5 {
                ev.positives += 1;
            }
        }
        ev.nodes += front.len();
    }
    ev.loss = loss_sum / items.len() as f64;
    ev.accuracy = correct as f64 / ev.nodes as f64;
    ev
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-item loss seen while stepping through the epoch.
    pub train_loss: f64,
    pub valid_loss: f64,
    pub valid_accuracy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    Stagnated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub initial_train: Evaluation,
    pub initial_valid: Evaluation,
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept; `None` if no epoch beat the
    /// untrained model.
    pub best_epoch: Option<usize>,
    pub stop: StopReason,
}

/// Trains `model` in place with Adam on per-item mean front BCE.
///
/// Each item contributes one randomly chosen example row per epoch. The
/// monitored loss is the validation loss (the training loss if `valid` is
/// empty); the best monitored parameters are restored at the end.
pub fn train<R: Rng + ?Sized>(
    model: &mut GatModel<f32>,
    train: &mut [LabeledExpansion],
    valid: &[LabeledExpansion],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainHistory, TrainError> {
    train_observed(model, train, valid, cfg, rng, &mut |_| {})
}

/// [`train`], calling `on_epoch` after every epoch.
pub fn train_observed<R: Rng + ?Sized>(
    model: &mut GatModel<f32>,
    train: &mut [LabeledExpansion],
    valid: &[LabeledExpansion],
    cfg: &TrainConfig,
    rng: &mut R,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<TrainHistory, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if let Some(item) = train.iter().position(|it| it.layout.front.is_empty()) {
        return Err(TrainError::EmptyFront { item });
    }
    if let Some(item) = valid.iter().position(|it| it.layout.front.is_empty()) {
        return Err(TrainError::EmptyFront { item });
    }
    let initial_train = evaluate(model, train, cfg.eval_rows);
    let initial_valid = evaluate(model, valid, cfg.eval_rows);
    let monitor = |ev: &Evaluation, train_loss: f64| if valid.is_empty() { train_loss } else { ev.loss };
    let mut best_loss = monitor(&initial_valid, initial_train.loss);
    let mut best_model = model.clone();
    let mut best_epoch = None;
    let mut since_best = 0;
    let mut stop = StopReason::MaxEpochs;

    let mut adam = AdamState::new(model, cfg);
    let mut grads = GatModel::<f32>::zeros(model.dims);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::new();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grads.tensors.iter_mut().for_each(|t| t.fill(0.0));
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let item = &train[idx];
                let j = rng.random_range(0..item.task.len());
                let x = features_as::<f32>(&item.graph, &item.layout, j, &item.task);
                let loss =
                    loss_and_grad(model, &x, item.layout.adjacency(), &item.layout.front, &item.targets, scale, &mut grads);
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss { item: idx, epoch });
                }
                epoch_loss += loss;
            }
            adam.update(model, &grads);
        }
        if cfg.resample_every > 0 && (epoch + 1) % cfg.resample_every == 0 {
            for item in train.iter_mut() {
                // an item whose expression is nowhere finite keeps its old rows
                let _ = item.resample(rng);
            }
        }
        let train_loss = epoch_loss / train.len() as f64;
        let ev = evaluate(model, valid, cfg.eval_rows);
        let stats = EpochStats { epoch, train_loss, valid_loss: ev.loss, valid_accuracy: ev.accuracy };
        on_epoch(&stats);
        epochs.push(stats);
        let current = monitor(&ev, train_loss);
        if best_loss - current >= cfg.min_delta {
            best_loss = current;
            best_model.clone_from(model);
            best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stop = StopReason::Stagnated;
                break;
            }
        }
    }
    *model = best_model;
    Ok(TrainHistory { initial_train, initial_valid, epochs, best_epoch, stop })
}
