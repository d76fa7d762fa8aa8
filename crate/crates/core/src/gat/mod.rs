//! Graph attention network that scores expansion-front application nodes.
//!
//! The network is generic over its element type: models are trained and
//! used in `f32`, and gradients are checked in `f64` against central finite
//! differences.

mod model;
mod scalar;
mod train;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;

pub use model::{bce_with_logit, sigmoid, Adjacency, ForwardCache, GatDims, GatModel, LayerCache, LEAKY_SLOPE};
pub use scalar::{matmul, Scalar};
pub use train::{evaluate, train, train_observed, AdamState, EpochStats, Evaluation, StopReason, TrainConfig, TrainError, TrainHistory};

use crate::data::SrTask;
use crate::featurize::{feature_matrix, GraphLayout};
use crate::semgraph::SemGraph;

impl GraphLayout {
    pub fn adjacency(&self) -> Adjacency<'_> {
        Adjacency { offsets: &self.offsets, neighbors: &self.neighbors }
    }
}

fn features_as<T: Scalar>(g: &SemGraph, layout: &GraphLayout, j: usize, task: &SrTask) -> Vec<T> {
    feature_matrix(g, layout, j, task).into_iter().map(|v| T::from_f64(v as f64)).collect()
}

/// Front scores for a single example row.
pub fn front_scores_at<T: Scalar>(model: &GatModel<T>, g: &SemGraph, layout: &GraphLayout, task: &SrTask, j: usize) -> Vec<f64> {
    let x = features_as::<T>(g, layout, j, task);
    let logits = model.logits(&x, layout.adjacency());
    layout.front.iter().map(|&i| sigmoid(logits[i].to_f64())).collect()
}

/// Saliency of every front node, averaged over the given example rows.
/// The result is aligned with `g.front()`.
pub fn saliency_map_rows<T: Scalar>(
    model: &GatModel<T>,
    g: &SemGraph,
    layout: &GraphLayout,
    task: &SrTask,
    rows: &[usize],
) -> Vec<f64> {
    let mut acc = vec![0.0; layout.front.len()];
    if rows.is_empty() {
        return acc;
    }
    for &j in rows {
        for (a, s) in acc.iter_mut().zip(front_scores_at(model, g, layout, task, j)) {
            *a += s;
        }
    }
    let k = rows.len() as f64;
    acc.iter().map(|a| (a / k).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)).collect()
}

/// Saliency of every front node, averaged over all examples of `task`.
pub fn saliency_map<T: Scalar>(model: &GatModel<T>, g: &SemGraph, task: &SrTask) -> Vec<f64> {
    let layout = GraphLayout::new(g);
    let rows: Vec<usize> = (0..task.len()).collect();
    saliency_map_rows(model, g, &layout, task, &rows)
}

/// Mean binary cross-entropy over the `front` node logits.
pub fn front_loss<T: Scalar>(model: &GatModel<T>, x: &[T], adj: Adjacency<'_>, front: &[usize], targets: &[f64]) -> f64 {
    let logits = model.logits(x, adj);
    let total: f64 = front.iter().zip(targets).map(|(&i, &t)| bce_with_logit(logits[i].to_f64(), t)).sum();
    total / front.len() as f64
}

/// Mean front loss and its gradient, scaled by `scale` and added to `grads`.
pub fn loss_and_grad<T: Scalar>(
    model: &GatModel<T>,
    x: &[T],
    adj: Adjacency<'_>,
    front: &[usize],
    targets: &[f64],
    scale: f64,
    grads: &mut GatModel<T>,
) -> f64 {
    assert_eq!(front.len(), targets.len());
    let cache = model.forward(x, adj);
    let mut dlogits = vec![T::ZERO; adj.n_nodes()];
    let mut total = 0.0;
    let m = front.len() as f64;
    for (&i, &t) in front.iter().zip(targets) {
        let z = cache.logits[i].to_f64();
        total += bce_with_logit(z, t);
        let s = if z >= 0.0 {
            1.0 / (1.0 + libm::exp(-z))
        } else {
            let e = libm::exp(z);
            e / (1.0 + e)
        };
        dlogits[i] += T::from_f64((s - t) * scale / m);
    }
    model.backward(x, adj, &cache, &dlogits, grads);
    total / m
}

/// Outcome of comparing analytic gradients with finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// Floor on the denominator of the relative error, so that entries whose
/// true gradient is essentially zero are compared absolutely.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Compares the analytic gradient of [`front_loss`] with central differences.
///
/// With `per_tensor = None` every parameter is checked; otherwise that many
/// entries are drawn without replacement from each tensor (all of them if
/// the tensor is smaller).
#[allow(clippy::too_many_arguments)]
pub fn gradient_check<R: Rng + ?Sized>(
    model: &GatModel<f64>,
    x: &[f64],
    adj: Adjacency<'_>,
    front: &[usize],
    targets: &[f64],
    per_tensor: Option<usize>,
    step: f64,
    rng: &mut R,
) -> GradCheck {
    let mut grads = GatModel::zeros(model.dims);
    loss_and_grad(model, x, adj, front, targets, 1.0, &mut grads);
    let names = model.names();
    let mut probe = model.clone();
    let mut out = GradCheck { checked: 0, max_rel_error: 0.0, worst: None };
    for t in 0..model.tensors.len() {
        let len = model.tensors[t].len();
        let entries: Vec<usize> = match per_tensor {
            Some(k) if k < len => sample(rng, len, k).into_vec(),
            _ => (0..len).collect(),
        };
        for idx in entries {
            let orig = model.tensors[t][idx];
            probe.tensors[t][idx] = orig + step;
            let up = front_loss(&probe, x, adj, front, targets);
            probe.tensors[t][idx] = orig - step;
            let down = front_loss(&probe, x, adj, front, targets);
            probe.tensors[t][idx] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grads.tensors[t][idx];
            let denom = libm::fmax(libm::fmax(libm::fabs(analytic), libm::fabs(numeric)), GRAD_CHECK_FLOOR);
            let rel = libm::fabs(analytic - numeric) / denom;
            out.checked += 1;
            if rel > out.max_rel_error || rel.is_nan() {
                out.max_rel_error = rel;
                out.worst = Some((names[t].clone(), idx));
            }
        }
    }
    out
}

