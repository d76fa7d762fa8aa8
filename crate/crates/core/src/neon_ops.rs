//! The library of promising subprograms, the expander that refills it each
//! generation, and the grafting operator that draws from it.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::SrTask;
use crate::expr::{sample_subtree_height_biased, Dsl, Expr};
use crate::featurize::GraphLayout;
use crate::gat::{saliency_map_rows, GatModel, Scalar};
use crate::semgraph::SemGraph;

/// Bounded first-in first-out queue of subprograms.
#[derive(Clone, Debug, PartialEq)]
pub struct Library {
    queue: VecDeque<Expr>,
    capacity: usize,
}

impl Library {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "library capacity must be positive");
        Library { queue: VecDeque::with_capacity(capacity), capacity }
    }

    /// Appends `tree`, evicting the oldest entry when full.
    pub fn push(&mut self, tree: Expr) {
        if self.queue.len() == self.capacity {
            self.queue.pop_front();
        }
        self.queue.push_back(tree);
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Expr> {
        self.queue.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Expr> {
        self.queue.get(i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionMode {
    /// Threshold the saliency map and keep the `top_k` best.
    Gnn,
    /// Keep up to `top_k` front nodes drawn uniformly.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpanderConfig {
    pub draw_fraction: f64,
    pub top_k: usize,
    pub saliency_threshold: f64,
    pub selection: SelectionMode,
    pub dsl: Dsl,
    /// Most applications one expansion may create. A sampled subtree whose
    /// expansion would exceed it is replaced by one of its own subtrees one
    /// level shorter, repeatedly.
    pub expansion_budget: usize,
    /// Number of evenly spaced example rows the saliency map averages over;
    /// `None` uses every row.
    pub saliency_rows: Option<usize>,
}

impl Default for ExpanderConfig {
    fn default() -> Self {
        ExpanderConfig {
            draw_fraction: 0.2,
            top_k: 5,
            saliency_threshold: 0.5,
            selection: SelectionMode::Gnn,
            dsl: Dsl::standard(),
            expansion_budget: crate::semgraph::DEFAULT_NODE_BUDGET,
            saliency_rows: None,
        }
    }
}

/// Anything that can score the front of an expanded graph.
pub trait FrontScorer {
    /// Scores aligned with `g.front()`, each in `(0, 1)`.
    fn score_front(&self, g: &SemGraph, layout: &GraphLayout, task: &SrTask, rows: &[usize]) -> Vec<f64>;
}

impl<T: Scalar> FrontScorer for GatModel<T> {
    fn score_front(&self, g: &SemGraph, layout: &GraphLayout, task: &SrTask, rows: &[usize]) -> Vec<f64> {
        saliency_map_rows(self, g, layout, task, rows)
    }
}

/// `k` evenly spaced row indices out of `n` (all of them if `k >= n`).
pub fn spread_rows(n: usize, k: Option<usize>) -> Vec<usize> {
    match k {
        Some(k) if k < n => (0..k.max(1)).map(|i| i * n / k.max(1)).collect(),
        _ => (0..n).collect(),
    }
}

/// What one expansion pass did.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionReport {
    /// Population indices of the drawn programs, in processing order.
    pub drawn: Vec<usize>,
    /// The subtree that was actually expanded for each drawn program.
    pub expanded: Vec<Expr>,
    pub front_sizes: Vec<usize>,
    /// Trees pushed to the library, in push order.
    pub pushed: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NeonError {
    #[error("library is empty")]
    EmptyLibrary,
    #[error("selection mode `gnn` needs a scorer")]
    MissingScorer,
}

/// Picks the front positions to keep: in GNN mode those scoring at least
/// the threshold, best first, at most `top_k`, ties in creation order.
pub fn select_front(scores: &[f64], cfg: &ExpanderConfig) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= cfg.saliency_threshold).collect();
    keep.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    keep.truncate(cfg.top_k);
    keep
}

/// Expands `s`, first replacing it by ever shorter subtrees of itself while
/// its expansion would exceed the budget. `None` when even a leaf does.
pub fn shrink_to_budget<R: Rng + ?Sized>(mut s: Expr, task: &SrTask, cfg: &ExpanderConfig, rng: &mut R) -> Option<(Expr, SemGraph)> {
    let terminals = cfg.dsl.terminals(task.arity());
    loop {
        let mut g = SemGraph::from_tree(&s, task).ok()?;
        if g.expansion_size(&cfg.dsl, &terminals) <= cfg.expansion_budget {
            g.expand(&cfg.dsl, &terminals, cfg.expansion_budget).ok()?;
            return Some((s, g));
        }
        let h = s.height();
        if h == 0 {
            return None;
        }
        let candidates = s.subtrees_of_height(h - 1);
        let at = candidates[rng.random_range(0..candidates.len())];
        s = s.subtree(at).ok()?.clone();
    }
}

/// Draws `ceil(draw_fraction * |P|)` programs, expands a height-biased
/// subtree of each by one level and pushes the selected candidates into
/// `lib`. Candidates are not evaluated for fitness.
///
/// The random stream `rng` is consumed identically in both selection modes;
/// random selection draws from a child stream seeded from it.
pub fn expand_population<R: RngCore + ?Sized>(
    population: &[Expr],
    task: &SrTask,
    lib: &mut Library,
    cfg: &ExpanderConfig,
    scorer: Option<&dyn FrontScorer>,
    rng: &mut R,
) -> Result<ExpansionReport, NeonError> {
    if cfg.selection == SelectionMode::Gnn && scorer.is_none() {
        return Err(NeonError::MissingScorer);
    }
    let mut select_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    let mut report = ExpansionReport::default();
    if population.is_empty() {
        return Ok(report);
    }
    let want = libm::ceil(cfg.draw_fraction * population.len() as f64) as usize;
    let drawn = sample(rng, population.len(), want.min(population.len())).into_vec();
    let rows = spread_rows(task.len(), cfg.saliency_rows);
    for &pi in &drawn {
        let p = &population[pi];
        let at = sample_subtree_height_biased(p, rng);
        let s = p.subtree(at).expect("sampled index lies inside the tree").clone();
        let Some((s, g)) = shrink_to_budget(s, task, cfg, rng) else {
            continue;
        };
        let front = g.front();
        report.expanded.push(s);
        report.drawn.push(pi);
        report.front_sizes.push(front.len());
        if front.is_empty() {
            continue;
        }
        let chosen = match cfg.selection {
            SelectionMode::Gnn => {
                let layout = GraphLayout::new(&g);
                let scores = scorer.expect("checked above").score_front(&g, &layout, task, &rows);
                select_front(&scores, cfg)
            }
            SelectionMode::Random => {
                let k = cfg.top_k.min(front.len());
                sample(&mut select_rng, front.len(), k).into_vec()
            }
        };
        for i in chosen {
            let tree = g.candidate_tree(front[i]);
            lib.push(tree.clone());
            report.pushed.push(tree);
        }
    }
    Ok(report)
}

/// Replaces a uniformly chosen subtree of `parent` by a uniformly chosen
/// library program.
pub fn graft<R: Rng + ?Sized>(parent: &Expr, lib: &Library, rng: &mut R) -> Result<Expr, NeonError> {
    if lib.is_empty() {
        return Err(NeonError::EmptyLibrary);
    }
    let at = rng.random_range(0..parent.size());
    let donor = &lib.queue[rng.random_range(0..lib.len())];
    Ok(parent.replace_subtree(at, donor).expect("index drawn within the tree"))
}
