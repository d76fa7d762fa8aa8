//! Generational tree GP with the four operator pipelines compared in the
//! experiments: plain GP, NEON, NEON with half crossover and half grafting,
//! and NEON with random instead of learned candidate selection.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use core::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SrTask;
use crate::expr::{random_tree_full, random_tree_grow, Dsl, Expr};
use crate::neon_ops::{expand_population, graft, ExpanderConfig, ExpansionReport, FrontScorer, Library, SelectionMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "GP")]
    Gp,
    #[serde(rename = "NEON")]
    Neon,
    #[serde(rename = "NEON-HH")]
    NeonHh,
    #[serde(rename = "NEON-ABL")]
    NeonAbl,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Gp, Variant::Neon, Variant::NeonHh, Variant::NeonAbl];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Gp => "GP",
            Variant::Neon => "NEON",
            Variant::NeonHh => "NEON-HH",
            Variant::NeonAbl => "NEON-ABL",
        }
    }

    pub fn uses_library(self) -> bool {
        self != Variant::Gp
    }

    pub fn needs_model(self) -> bool {
        matches!(self, Variant::Neon | Variant::NeonHh)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown variant `{0}` (expected GP, NEON, NEON-HH or NEON-ABL)")]
pub struct UnknownVariant(pub String);

impl FromStr for Variant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').flat_map(char::to_uppercase).collect();
        match norm.as_str() {
            "GP" => Ok(Variant::Gp),
            "NEON" => Ok(Variant::Neon),
            "NEONHH" => Ok(Variant::NeonHh),
            "NEONABL" => Ok(Variant::NeonAbl),
            _ => Err(UnknownVariant(s.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub mutation_prob: f64,
    pub height_limit: usize,
    pub mutation_bound: MutationBound,
    pub success_threshold: f64,
    pub init_min_height: usize,
    pub init_max_height: usize,
    pub seed: u64,
    pub dsl: Dsl,
    /// Expander settings; the selection mode is set from `variant`.
    pub expander: ExpanderConfig,
}

impl RunConfig {
    pub fn new(variant: Variant, population_size: usize, seed: u64) -> Self {
        RunConfig {
            variant,
            population_size,
            generations: 50,
            tournament_size: 7,
            mutation_prob: 0.2,
            height_limit: 13,
            mutation_bound: MutationBound::Subtree,
            success_threshold: 1e-10,
            init_min_height: 1,
            init_max_height: 6,
            seed,
            dsl: Dsl::standard(),
            expander: ExpanderConfig::default(),
        }
    }
}

/// Statistics of one evaluated generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best MSE seen so far in the run.
    pub best_mse: f64,
    pub generation_best_mse: f64,
    /// Mean over individuals with finite MSE.
    pub mean_mse: f64,
    pub non_finite: usize,
    pub mean_size: f64,
    pub best_size: usize,
    pub library_fill: usize,
    /// Library pushes made by this generation's expansion.
    pub pushed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best_tree: Expr,
    pub best_mse: f64,
    pub success: bool,
    pub best_size: usize,
    pub generations: Vec<GenerationRecord>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvolveError {
    #[error("variant {0} needs a trained model")]
    MissingModel(Variant),
    #[error("population size must be positive")]
    EmptyPopulation,
}

/// Mean squared error of `tree` on `task`; non-finite results map to `+inf`.
pub fn fitness_mse(tree: &Expr, task: &SrTask) -> f64 {
    let Ok(pred) = tree.eval(&task.inputs) else {
        return f64::INFINITY;
    };
    let mut sum = 0.0;
    for (p, y) in pred.iter().zip(&task.targets) {
        let d = p - y;
        sum += d * d;
    }
    let mse = sum / task.len() as f64;
    if mse.is_finite() {
        mse
    } else {
        f64::INFINITY
    }
}

/// Index of the winner of a tournament of `size` draws with replacement;
/// the lowest fitness wins and ties go to a uniformly chosen contender.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty());
    let mut best = rng.random_range(0..fitness.len());
    let mut ties = 1;
    for _ in 1..size.max(1) {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] < fitness[best] {
            best = c;
            ties = 1;
        } else if fitness[c] == fitness[best] {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = c;
            }
        }
    }
    best
}

/// Replaces a uniformly chosen subtree of `p1` by a uniformly chosen
/// subtree of `p2`.
pub fn subtree_crossover<R: Rng + ?Sized>(p1: &Expr, p2: &Expr, rng: &mut R) -> Expr {
    let a = rng.random_range(0..p1.size());
    let b = rng.random_range(0..p2.size());
    let donor = p2.subtree(b).expect("index within donor");
    p1.replace_subtree(a, donor).expect("index within receiver")
}

/// How the bound `h` of subtree mutation is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationBound {
    /// Height of the replaced subtree; offspring never grow.
    Subtree,
    /// Room left under the height limit at the chosen node.
    Remaining(usize),
}

/// Replaces a uniformly chosen subtree by a grown tree of height at most
/// `h'`, with `h'` uniform in `0..=h` and `h` given by `bound`.
pub fn subtree_mutation<R: Rng + ?Sized>(p: &Expr, dsl: &Dsl, arity: usize, bound: MutationBound, rng: &mut R) -> Expr {
    let at = rng.random_range(0..p.size());
    let h = match bound {
        MutationBound::Subtree => p.subtree(at).expect("index within tree").height(),
        MutationBound::Remaining(limit) => limit.saturating_sub(p.node_depths()[at]),
    };
    let hp = rng.random_range(0..=h);
    let fresh = random_tree_grow(dsl, arity, hp, rng);
    p.replace_subtree(at, &fresh).expect("index within tree")
}

/// Ramped half-and-half: each individual gets a height uniform in
/// `min..=max` and is built by "grow" or "full" with equal probability.
pub fn ramped_half_and_half<R: Rng + ?Sized>(n: usize, dsl: &Dsl, arity: usize, min: usize, max: usize, rng: &mut R) -> Vec<Expr> {
    (0..n)
        .map(|_| {
            let h = rng.random_range(min..=max);
            if rng.random_bool(0.5) {
                random_tree_grow(dsl, arity, h, rng)
            } else {
                random_tree_full(dsl, arity, h, rng)
            }
        })
        .collect()
}

/// What an observer sees after each generation's expansion step.
pub struct GenerationView<'a> {
    pub generation: usize,
    pub population: &'a [Expr],
    pub fitness: &'a [f64],
    pub library: &'a Library,
    pub expansion: Option<&'a ExpansionReport>,
}

/// Runs one evolutionary run.
pub fn evolve(task: &SrTask, cfg: &RunConfig, scorer: Option<&dyn FrontScorer>) -> Result<RunResult, EvolveError> {
    evolve_observed(task, cfg, scorer, &mut |_| {})
}

/// [`evolve`], calling `observe` once per generation after evaluation and
/// expansion.
pub fn evolve_observed(
    task: &SrTask,
    cfg: &RunConfig,
    scorer: Option<&dyn FrontScorer>,
    observe: &mut dyn FnMut(GenerationView<'_>),
) -> Result<RunResult, EvolveError> {
    if cfg.variant.needs_model() && scorer.is_none() {
        return Err(EvolveError::MissingModel(cfg.variant));
    }
    if cfg.population_size == 0 {
        return Err(EvolveError::EmptyPopulation);
    }
    #[cfg(feature = "std")]
    let started = std::time::Instant::now();

    let arity = task.arity();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut expander = cfg.expander.clone();
    expander.selection = if cfg.variant == Variant::NeonAbl { SelectionMode::Random } else { SelectionMode::Gnn };
    let mut library = Library::new(cfg.population_size);

    let mut population =
        ramped_half_and_half(cfg.population_size, &cfg.dsl, arity, cfg.init_min_height, cfg.init_max_height, &mut rng);
    let mut best_tree = population[0].clone();
    let mut best_mse = f64::INFINITY;
    let mut records = Vec::with_capacity(cfg.generations + 1);

    for generation in 0..=cfg.generations {
        let fitness: Vec<f64> = population.iter().map(|t| fitness_mse(t, task)).collect();
        let (gi, gbest) = fitness
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        if gbest < best_mse {
            best_mse = gbest;
            best_tree = population[gi].clone();
        }

        let expansion = if cfg.variant.uses_library() && generation < cfg.generations {
            let report = expand_population(&population, task, &mut library, &expander, scorer, &mut rng)
                .expect("scorer presence checked for learned selection");
            Some(report)
        } else {
            None
        };

        let finite: Vec<f64> = fitness.iter().copied().filter(|v| v.is_finite()).collect();
        records.push(GenerationRecord {
            generation,
            best_mse,
            generation_best_mse: gbest,
            mean_mse: if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 },
            non_finite: fitness.len() - finite.len(),
            mean_size: population.iter().map(Expr::size).sum::<usize>() as f64 / population.len() as f64,
            best_size: best_tree.size(),
            library_fill: library.len(),
            pushed: expansion.as_ref().map_or(0, |r| r.pushed.len()),
        });
        observe(GenerationView {
            generation,
            population: &population,
            fitness: &fitness,
            library: &library,
            expansion: expansion.as_ref(),
        });
        if generation == cfg.generations {
            break;
        }

        let mut next = Vec::with_capacity(population.len());
        for _ in 0..population.len() {
            let p1 = &population[tournament_select(&fitness, cfg.tournament_size, &mut rng)];
            let try_graft = match cfg.variant {
                Variant::Gp => false,
                Variant::Neon | Variant::NeonAbl => true,
                Variant::NeonHh => rng.random_bool(0.5),
            };
            let mut child = if try_graft && !library.is_empty() {
                graft(p1, &library, &mut rng).expect("library is non-empty")
            } else {
                let p2 = &population[tournament_select(&fitness, cfg.tournament_size, &mut rng)];
                subtree_crossover(p1, p2, &mut rng)
            };
            if rng.random_bool(cfg.mutation_prob) {
                child = subtree_mutation(&child, &cfg.dsl, arity, cfg.mutation_bound, &mut rng);
            }
            if child.height() > cfg.height_limit {
                child = p1.clone();
            }
            next.push(child);
        }
        population = next;
    }

    #[cfg(feature = "std")]
    let wall_time = started.elapsed();
    #[cfg(not(feature = "std"))]
    let wall_time = Duration::ZERO;
    Ok(RunResult {
        best_size: best_tree.size(),
        success: best_mse < cfg.success_threshold,
        best_tree,
        best_mse,
        generations: records,
        wall_time,
    })
}
