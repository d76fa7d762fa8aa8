//! Synthetic regression tasks and the labelled corpus for training the
//! graph network.
//!
//! A corpus item comes from a random expression `p`: `p` is cut at a random
//! depth, the subtrees hanging below the cut are loaded into a semantic
//! graph, the graph is expanded by one level, and every new application is
//! labelled positive when the tree it stands for also occurs somewhere in
//! `p`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{DataMatrix, SrTask};
use crate::expr::{random_tree_grow, Dsl, Expr};
use crate::featurize::GraphLayout;
use crate::semgraph::{AppId, GraphError, SemGraph, DEFAULT_NODE_BUDGET};

pub const MAX_CONSECUTIVE_REJECTIONS: usize = 10_000;
pub const DEFAULT_EXAMPLES: usize = 100;
pub const VALID_ITEMS: usize = 60;

const TASK_STREAM: u64 = 0x7A5C_0000_0000_0001;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskgenError {
    #[error("no finite target after {0} consecutive draws")]
    NowhereFinite(usize),
    #[error("split depth {depth} outside 1..={height}")]
    BadDepth { depth: usize, height: usize },
    #[error("expansion produced an empty front")]
    EmptyFront,
    #[error("front of {size} candidates exceeds the cap of {cap}")]
    FrontTooLarge { size: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("corpus needs more than {valid} items, got {count}")]
    CorpusTooSmall { count: usize, valid: usize },
    #[error("gave up after {attempts} attempts with {accepted} of {count} items accepted")]
    Exhausted { attempts: usize, accepted: usize, count: usize },
}

/// Random training expression: a height bound is drawn uniformly from
/// `1..=max_height`, a tree is grown under it, and trees without any
/// variable are redrawn.
pub fn gen_training_expression<R: Rng + ?Sized>(dsl: &Dsl, arity: usize, max_height: usize, rng: &mut R) -> Expr {
    assert!(arity >= 1 && max_height >= 1);
    loop {
        let h = rng.random_range(1..=max_height);
        let t = random_tree_grow(dsl, arity, h, rng);
        if t.has_var() {
            return t;
        }
    }
}

/// Samples `n` standard-normal input rows on which `p` is finite and
/// evaluates `p` on them.
pub fn gen_task<R: Rng + ?Sized>(p: &Expr, arity: usize, n: usize, rng: &mut R) -> Result<SrTask, TaskgenError> {
    assert!(n >= 1);
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut row = alloc::vec![0.0; arity];
    let mut rejected = 0;
    while rows.len() < n {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let y = p.eval_row(&row);
        if y.is_finite() {
            rows.push(row.clone());
            targets.push(y);
            rejected = 0;
        } else {
            rejected += 1;
            if rejected > MAX_CONSECUTIVE_REJECTIONS {
                return Err(TaskgenError::NowhereFinite(MAX_CONSECUTIVE_REJECTIONS));
            }
        }
    }
    Ok(SrTask::new(format!("{p}"), DataMatrix::from_rows(arity, &rows), targets, Some(p.clone())))
}

/// Expansion settings for building labelled items.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelConfig {
    pub dsl: Dsl,
    /// Node budget of the one-level expansion.
    pub budget: usize,
    /// Items with a larger front are rejected.
    pub max_front: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig { dsl: Dsl::standard(), budget: DEFAULT_NODE_BUDGET, max_front: usize::MAX }
    }
}

/// An expanded graph with binary targets over its front.
#[derive(Clone, Debug)]
pub struct LabeledExpansion {
    pub graph: SemGraph,
    pub layout: GraphLayout,
    pub task: SrTask,
    /// 1.0 or 0.0 per front node, aligned with `graph.front()`.
    pub targets: Vec<f64>,
    pub origin: Expr,
    pub split_depth: usize,
}

impl LabeledExpansion {
    pub fn front(&self) -> &[AppId] {
        self.graph.front()
    }

    pub fn positives(&self) -> usize {
        self.targets.iter().filter(|&&t| t > 0.5).count()
    }

    /// Draws fresh input rows for the origin expression and recomputes every
    /// value in the graph. Structure and targets are unchanged.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(), TaskgenError> {
        let task = gen_task(&self.origin, self.task.arity(), self.task.len(), rng)?;
        self.graph.reinstantiate(&task);
        self.task = task;
        Ok(())
    }
}

/// Normalized strings of every subtree of `p`.
pub fn subtree_strings(p: &Expr) -> BTreeSet<String> {
    p.preorder().into_iter().map(Expr::normalized_string).collect()
}

/// Splits `p` at `depth`, expands the lower part one level and labels the
/// front.
pub fn label_at_depth(p: &Expr, task: &SrTask, depth: usize, cfg: &LabelConfig) -> Result<LabeledExpansion, TaskgenError> {
    let height = p.height();
    if depth == 0 || depth > height {
        return Err(TaskgenError::BadDepth { depth, height });
    }
    let nodes = p.preorder();
    let lower: Vec<Expr> = p
        .node_depths()
        .iter()
        .zip(&nodes)
        .filter(|(&d, _)| d == depth)
        .map(|(_, &t)| t.clone())
        .collect();
    let mut graph = SemGraph::from_trees(&lower, task)?;
    graph.expand(&cfg.dsl, &cfg.dsl.terminals(task.arity()), cfg.budget)?;
    let front = graph.front();
    if front.is_empty() {
        return Err(TaskgenError::EmptyFront);
    }
    if front.len() > cfg.max_front {
        return Err(TaskgenError::FrontTooLarge { size: front.len(), cap: cfg.max_front });
    }
    let inside = subtree_strings(p);
    let targets = front
        .iter()
        .map(|&a| if inside.contains(&graph.candidate_tree(a).normalized_string()) { 1.0 } else { 0.0 })
        .collect();
    let layout = GraphLayout::new(&graph);
    Ok(LabeledExpansion { graph, layout, task: task.clone(), targets, origin: p.clone(), split_depth: depth })
}

/// Draws a split depth uniformly from `1..=height(p)` and labels that split.
pub fn split_and_label<R: Rng + ?Sized>(
    p: &Expr,
    task: &SrTask,
    cfg: &LabelConfig,
    rng: &mut R,
) -> Result<LabeledExpansion, TaskgenError> {
    let height = p.height();
    if height == 0 {
        return Err(TaskgenError::BadDepth { depth: 0, height });
    }
    label_at_depth(p, task, rng.random_range(1..=height), cfg)
}

/// What is needed to rebuild one corpus item exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusRecord {
    pub seed: u64,
    pub arity: usize,
    pub split_depth: usize,
    pub origin: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    /// Total items, validation included.
    pub count: usize,
    pub valid: usize,
    pub min_arity: usize,
    pub max_arity: usize,
    pub max_height: usize,
    pub examples: usize,
    pub label: LabelConfig,
    /// Attempts allowed per requested item before giving up.
    pub attempts_per_item: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            count: 500 + VALID_ITEMS,
            valid: VALID_ITEMS,
            min_arity: 1,
            max_arity: 6,
            max_height: 6,
            examples: DEFAULT_EXAMPLES,
            label: LabelConfig::default(),
            attempts_per_item: 200,
        }
    }
}

fn task_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ TASK_STREAM)
}

/// Rebuilds the item described by `record`.
pub fn rebuild_item(record: &CorpusRecord, cfg: &CorpusConfig) -> Result<LabeledExpansion, TaskgenError> {
    let task = gen_task(&record.origin, record.arity, cfg.examples, &mut task_rng(record.seed))?;
    label_at_depth(&record.origin, &task, record.split_depth, &cfg.label)
}

/// Generates one candidate item from its seed.
pub fn item_from_seed(seed: u64, cfg: &CorpusConfig) -> Result<(CorpusRecord, LabeledExpansion), TaskgenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arity = rng.random_range(cfg.min_arity..=cfg.max_arity);
    let origin = gen_training_expression(&cfg.label.dsl, arity, cfg.max_height, &mut rng);
    let height = origin.height();
    if height == 0 {
        return Err(TaskgenError::BadDepth { depth: 0, height });
    }
    let split_depth = rng.random_range(1..=height);
    let record = CorpusRecord { seed, arity, split_depth, origin };
    let item = rebuild_item(&record, cfg)?;
    Ok((record, item))
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub train: Vec<LabeledExpansion>,
    pub valid: Vec<LabeledExpansion>,
    pub train_records: Vec<CorpusRecord>,
    pub valid_records: Vec<CorpusRecord>,
}

/// Builds `cfg.count` items with pairwise distinct origin expressions; the
/// last `cfg.valid` of them form the validation set. Candidates that cannot
/// be labelled (nowhere-finite expression, empty or oversized front,
/// exhausted budget) are skipped.
pub fn build_corpus<R: RngCore + ?Sized>(cfg: &CorpusConfig, rng: &mut R) -> Result<Corpus, TaskgenError> {
    if cfg.count <= cfg.valid {
        return Err(TaskgenError::CorpusTooSmall { count: cfg.count, valid: cfg.valid });
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(cfg.count);
    let mut items = Vec::with_capacity(cfg.count);
    let max_attempts = cfg.count.saturating_mul(cfg.attempts_per_item);
    let mut attempts = 0;
    while items.len() < cfg.count {
        if attempts >= max_attempts {
            return Err(TaskgenError::Exhausted { attempts, accepted: items.len(), count: cfg.count });
        }
        attempts += 1;
        let seed = rng.next_u64();
        let Ok((record, item)) = item_from_seed(seed, cfg) else {
            continue;
        };
        if !seen.insert(record.origin.canonical_string()) {
            continue;
        }
        records.push(record);
        items.push(item);
    }
    let split = cfg.count - cfg.valid;
    let valid = items.split_off(split);
    let valid_records = records.split_off(split);
    Ok(Corpus { train: items, valid, train_records: records, valid_records })
}

/// Rebuilds a corpus from its records.
pub fn rebuild_corpus(
    train: &[CorpusRecord],
    valid: &[CorpusRecord],
    cfg: &CorpusConfig,
) -> Result<Corpus, TaskgenError> {
    let build = |rs: &[CorpusRecord]| rs.iter().map(|r| rebuild_item(r, cfg)).collect::<Result<Vec<_>, _>>();
    Ok(Corpus { train: build(train)?, valid: build(valid)?, train_records: train.to_vec(), valid_records: valid.to_vec() })
}
