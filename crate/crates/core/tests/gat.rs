use neon_core::data::{DataMatrix, SrTask};
use neon_core::expr::parse;
use neon_core::featurize::FEATURE_DIM;
use neon_core::gat::{
    bce_with_logit, evaluate, front_scores_at, gradient_check, saliency_map, sigmoid, train, AdamState, Adjacency,
    GatDims, GatModel, TrainConfig, TrainError,
};
use neon_core::taskgen::{label_at_depth, LabelConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct RandomGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl RandomGraph {
    fn new(n: usize, extra_edges: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut adj: Vec<Vec<u32>> = (0..n).map(|i| vec![i as u32]).collect();
        for _ in 0..extra_edges {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            adj[a].push(b as u32);
            adj[b].push(a as u32);
        }
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        for mut l in adj {
            l.sort_unstable();
            l.dedup();
            neighbors.extend(l);
            offsets.push(neighbors.len());
        }
        RandomGraph { offsets, neighbors }
    }

    fn adj(&self) -> Adjacency<'_> {
        Adjacency { offsets: &self.offsets, neighbors: &self.neighbors }
    }
}

fn random_features(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n * dim).map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 }).collect()
}

const SMALL: GatDims = GatDims { input: FEATURE_DIM, hidden: 8, heads: 2, layers: 3 };

#[test]
fn parameter_count_matches_architecture() {
    let d = GatDims::STANDARD;
    let per_head = 256 * 64 + 128;
    let expected = 79 * 256 + 256 + 3 * 4 * per_head + 256 + 1;
    assert_eq!(d.param_count(), expected);
    let m = GatModel::<f32>::init(d, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(m.param_count(), expected);
    assert_eq!(m.names()[3], "layer0.attention");
}

#[test]
fn zero_output_head_gives_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut m = GatModel::<f64>::init(SMALL, &mut rng);
    let k = m.tensors.len();
    m.tensors[k - 2].fill(0.0);
    m.tensors[k - 1].fill(0.0);
    let g = RandomGraph::new(6, 8, &mut rng);
    let x = random_features(6, FEATURE_DIM, &mut rng);
    for z in m.logits(&x, g.adj()) {
        assert_eq!(sigmoid(z), 0.5);
    }
}

#[test]
fn isolated_node_reduces_to_elu_of_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dims = GatDims { layers: 1, ..SMALL };
    let m = GatModel::<f64>::init(dims, &mut rng);
    let g = RandomGraph::new(1, 0, &mut rng);
    let x = random_features(1, FEATURE_DIM, &mut rng);
    let cache = m.forward(&x, g.adj());
    let h0 = &cache.states[0];
    let w = &m.tensors[2];
    for c in 0..dims.hidden {
        let z: f64 = (0..dims.hidden).map(|r| h0[r] * w[r * dims.hidden + c]).sum();
        let want = if z > 0.0 { z } else { libm::expm1(z) };
        assert!((cache.states[1][c] - want).abs() < 1e-12);
    }
}

#[test]
fn attention_is_normalized_per_node_head_and_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = GatModel::<f32>::init(GatDims::STANDARD, &mut rng);
    let g = RandomGraph::new(20, 40, &mut rng);
    let x: Vec<f32> = random_features(20, FEATURE_DIM, &mut rng).into_iter().map(|v| v as f32).collect();
    let cache = m.forward(&x, g.adj());
    for l in 0..3 {
        let alpha = m.attention(&cache, l);
        for i in 0..20 {
            for k in 0..4 {
                let s: f32 = (g.offsets[i]..g.offsets[i + 1]).map(|e| alpha[e * 4 + k]).sum();
                assert!((s - 1.0).abs() < 1e-5, "layer {l} node {i} head {k}: {s}");
            }
        }
    }
}

#[test]
fn permuting_nodes_permutes_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = GatModel::<f64>::init(SMALL, &mut rng);
    let n = 10;
    let g = RandomGraph::new(n, 15, &mut rng);
    let x = random_features(n, FEATURE_DIM, &mut rng);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    // node i of the original graph becomes node perm[i]
    let mut inv = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let mut px = vec![0.0; x.len()];
    for i in 0..n {
        px[perm[i] * FEATURE_DIM..(perm[i] + 1) * FEATURE_DIM]
            .copy_from_slice(&x[i * FEATURE_DIM..(i + 1) * FEATURE_DIM]);
    }
    let mut offsets = vec![0];
    let mut neighbors = Vec::new();
    for &old in inv.iter() {
        let mut l: Vec<u32> =
            g.neighbors[g.offsets[old]..g.offsets[old + 1]].iter().map(|&j| perm[j as usize] as u32).collect();
        l.sort_unstable();
        neighbors.extend(l);
        offsets.push(neighbors.len());
    }
    let a = m.logits(&x, g.adj());
    let b = m.logits(&px, Adjacency { offsets: &offsets, neighbors: &neighbors });
    for i in 0..n {
        assert!((a[i] - b[perm[i]]).abs() < 1e-12);
    }
}

#[test]
fn uniform_prediction_loss_is_ln2() {
    assert!((bce_with_logit(0.0, 1.0) - core::f64::consts::LN_2).abs() < 1e-15);
    assert!((bce_with_logit(0.0, 0.0) - core::f64::consts::LN_2).abs() < 1e-15);
    // stable far out in the tails
    assert!((bce_with_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
    assert!(bce_with_logit(800.0, 1.0) < 1e-300);
    let s = sigmoid(100.0);
    assert!(s > 0.0 && s < 1.0);
    assert!(sigmoid(-1000.0) > 0.0);
}

#[test]
fn every_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = GatModel::<f64>::init(SMALL, &mut rng);
    let g = RandomGraph::new(12, 16, &mut rng);
    let x = random_features(12, FEATURE_DIM, &mut rng);
    let front = [3, 5, 7, 8, 11];
    let targets = [1.0, 0.0, 0.0, 1.0, 0.0];
    let r = gradient_check(&m, &x, g.adj(), &front, &targets, None, 1e-5, &mut rng);
    assert_eq!(r.checked, SMALL.param_count());
    assert!(r.max_rel_error < 1e-4, "{r:?}");
}

#[test]
fn full_size_gradients_on_sampled_entries() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = GatModel::<f64>::init(GatDims::STANDARD, &mut rng);
    let g = RandomGraph::new(12, 14, &mut rng);
    let x = random_features(12, FEATURE_DIM, &mut rng);
    let front = [0, 4, 9];
    let targets = [0.0, 1.0, 0.0];
    let r = gradient_check(&m, &x, g.adj(), &front, &targets, Some(40), 1e-5, &mut rng);
    assert!(r.max_rel_error < 1e-4, "{r:?}");
}

fn sample_item() -> neon_core::taskgen::LabeledExpansion {
    let p = parse("(add (mul x0 x1) (sin x0))").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let task = neon_core::taskgen::gen_task(&p, 2, 6, &mut rng).unwrap();
    label_at_depth(&p, &task, 1, &LabelConfig::default()).unwrap()
}

#[test]
fn saliency_is_mean_of_per_row_maps() {
    let item = sample_item();
    let m = GatModel::<f32>::init(GatDims::STANDARD, &mut ChaCha8Rng::seed_from_u64(10));
    let map = saliency_map(&m, &item.graph, &item.task);
    assert_eq!(map.len(), item.front().len());
    let mut mean = vec![0.0; map.len()];
    for j in 0..item.task.len() {
        for (a, s) in mean.iter_mut().zip(front_scores_at(&m, &item.graph, &item.layout, &item.task, j)) {
            *a += s / item.task.len() as f64;
        }
    }
    for (a, b) in map.iter().zip(&mean) {
        assert!((a - b).abs() < 1e-6);
        assert!(*a > 0.0 && *a < 1.0);
    }
}

#[test]
fn duplicated_rows_do_not_change_the_map() {
    let item = sample_item();
    let m = GatModel::<f32>::init(GatDims::STANDARD, &mut ChaCha8Rng::seed_from_u64(11));
    let row = item.task.inputs.row(2);
    let one = SrTask::new("one", DataMatrix::from_rows(2, std::slice::from_ref(&row)), vec![item.task.targets[2]], None);
    let three = SrTask::new(
        "three",
        DataMatrix::from_rows(2, &[row.clone(), row.clone(), row]),
        vec![item.task.targets[2]; 3],
        None,
    );
    let mut g1 = item.graph.clone();
    g1.reinstantiate(&one);
    let mut g3 = item.graph.clone();
    g3.reinstantiate(&three);
    let a = saliency_map(&m, &g1, &one);
    let b = saliency_map(&m, &g3, &three);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn single_item_overfits() {
    let mut items = vec![sample_item()];
    let mut m = GatModel::<f32>::init(GatDims::STANDARD, &mut ChaCha8Rng::seed_from_u64(12));
    let cfg = TrainConfig { max_epochs: 200, patience: 200, resample_every: 0, ..TrainConfig::default() };
    let h = train(&mut m, &mut items, &[], &cfg, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
    let after = evaluate(&m, &items, cfg.eval_rows);
    assert!(after.loss <= 0.5 * h.initial_train.loss, "{} -> {}", h.initial_train.loss, after.loss);
}

#[test]
fn training_is_deterministic_and_rejects_empty_corpus() {
    let cfg = TrainConfig { max_epochs: 3, ..TrainConfig::default() };
    let run = || {
        let mut items = vec![sample_item(), sample_item()];
        let mut m = GatModel::<f32>::init(SMALL, &mut ChaCha8Rng::seed_from_u64(14));
        let h = train(&mut m, &mut items, &[], &cfg, &mut ChaCha8Rng::seed_from_u64(15)).unwrap();
        (m, h)
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let mut m = GatModel::<f32>::init(SMALL, &mut ChaCha8Rng::seed_from_u64(14));
    assert_eq!(
        train(&mut m, &mut [], &[], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err(),
        TrainError::EmptyCorpus
    );
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut m = GatModel::<f64>::zeros(SMALL);
    let mut g = GatModel::<f64>::zeros(SMALL);
    g.tensors[0][0] = 3.0;
    g.tensors[1][0] = -0.5;
    let mut adam = AdamState::new(&m, &TrainConfig::default());
    adam.update(&mut m, &g);
    assert!((m.tensors[0][0] + 1e-3).abs() < 1e-9);
    assert!((m.tensors[1][0] - 1e-3).abs() < 1e-9);
    assert_eq!(m.tensors[0][1], 0.0);
}
