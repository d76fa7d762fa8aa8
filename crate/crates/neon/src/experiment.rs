//! Grids of evolutionary runs over problems, variants, population sizes and
//! seeds.
//!
//! Every cell writes `runs/{problem}__{variant}__p{pop}__s{seed}.jsonl` under
//! the output directory. A cell whose file already ends with a summary
//! carrying the cell's configuration hash is skipped, so an interrupted
//! experiment resumes where it stopped.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use neon_core::evolution::{evolve, EvolveError, RunConfig, RunResult, Variant};
use neon_core::gat::GatModel;
use neon_core::neon_ops::FrontScorer;
use neon_core::semgraph::DEFAULT_NODE_BUDGET;
use neon_core::taskgen::TaskgenError;
use neon_core::SrTask;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::model_file::{read_model, ModelFileError};
use crate::problems::{materialize_task, ProblemSpec};
use crate::runlog::{read_summary, render_log, RunMeta, RunSummary};

/// Knobs shared by every run of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSettings {
    pub generations: usize,
    /// Seed of the example inputs drawn for each problem.
    pub data_seed: u64,
    pub expansion_budget: usize,
    pub saliency_rows: Option<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { generations: 50, data_seed: 0, expansion_budget: DEFAULT_NODE_BUDGET, saliency_rows: None }
    }
}

impl RunSettings {
    pub fn run_config(&self, variant: Variant, population: usize, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(variant, population, seed);
        cfg.generations = self.generations;
        cfg.expander.expansion_budget = self.expansion_budget;
        cfg.expander.saliency_rows = self.saliency_rows;
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub problems: Vec<ProblemSpec>,
    pub variants: Vec<Variant>,
    pub populations: Vec<usize>,
    pub seeds: Vec<u64>,
    pub settings: RunSettings,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub threads: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("the plan has no cells")]
    Empty,
    #[error("variant {0} needs a model file")]
    MissingModel(Variant),
    #[error("loading model: {0}")]
    Model(#[from] ModelFileError),
    #[error("problem `{id}`: {source}")]
    Task { id: String, source: TaskgenError },
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.display().to_string(), source }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One run of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub problem: usize,
    pub variant: Variant,
    pub population: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for problem in 0..self.problems.len() {
            for &variant in &self.variants {
                for &population in &self.populations {
                    for &seed in &self.seeds {
                        out.push(Cell { problem, variant, population, seed });
                    }
                }
            }
        }
        out
    }

    pub fn cell_file(&self, cell: &Cell) -> PathBuf {
        self.out.join("runs").join(cell_file_name(&self.problems[cell.problem].id, cell.variant, cell.population, cell.seed))
    }
}

pub fn cell_file_name(problem: &str, variant: Variant, population: usize, seed: u64) -> String {
    format!("{problem}__{variant}__p{population}__s{seed}.jsonl")
}

fn problem_json(p: &ProblemSpec) -> serde_json::Value {
    json!({ "id": p.id, "arity": p.arity, "formula": p.formula.to_string(), "ranges": p.ranges, "n": p.n })
}

/// Canonical description of one run; its hash names the configuration.
pub fn cell_config(
    problem: &ProblemSpec,
    variant: Variant,
    population: usize,
    seed: u64,
    settings: &RunSettings,
    model_hash: Option<&str>,
) -> serde_json::Value {
    json!({
        "problem": problem_json(problem),
        "variant": variant,
        "population": population,
        "seed": seed,
        "settings": settings,
        "model": if variant.needs_model() { model_hash } else { None },
    })
}

pub fn config_hash(config: &serde_json::Value) -> String {
    sha256_hex(config.to_string().as_bytes())
}

/// Runs one configuration and renders its log.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    problem: &ProblemSpec,
    task: &SrTask,
    variant: Variant,
    population: usize,
    seed: u64,
    settings: &RunSettings,
    model: Option<&GatModel<f32>>,
    model_hash: Option<&str>,
) -> Result<(RunResult, String, RunSummary), ExperimentError> {
    let cfg = settings.run_config(variant, population, seed);
    let scorer = model.filter(|_| variant.needs_model()).map(|m| m as &dyn FrontScorer);
    let result = evolve(task, &cfg, scorer)?;
    let meta = RunMeta {
        problem: problem.id.clone(),
        arity: problem.arity,
        variant,
        population,
        seed,
        config_hash: config_hash(&cell_config(problem, variant, population, seed, settings, model_hash)),
    };
    let log = render_log(&meta, &result);
    let summary = crate::runlog::summarize(&meta, &result);
    Ok((result, log, summary))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutcome {
    pub ran: usize,
    pub skipped: usize,
    pub summaries: Vec<RunSummary>,
}

/// Model file hash and the parsed model, when the plan needs one.
fn plan_model(plan: &ExperimentPlan) -> Result<Option<(GatModel<f32>, String)>, ExperimentError> {
    if let Some(&v) = plan.variants.iter().find(|v| v.needs_model()) {
        let path = plan.model.as_ref().ok_or(ExperimentError::MissingModel(v))?;
        return load_model_with_hash(path).map(Some);
    }
    Ok(None)
}

pub fn manifest(plan: &ExperimentPlan, model_hash: Option<&str>) -> serde_json::Value {
    let config = json!({
        "problems": plan.problems.iter().map(problem_json).collect::<Vec<_>>(),
        "variants": plan.variants,
        "populations": plan.populations,
        "seeds": plan.seeds,
        "settings": plan.settings,
        "model": model_hash,
    });
    let cells: Vec<_> = plan
        .cells()
        .iter()
        .map(|c| {
            let p = &plan.problems[c.problem];
            json!({
                "file": cell_file_name(&p.id, c.variant, c.population, c.seed),
                "config_hash": config_hash(&cell_config(p, c.variant, c.population, c.seed, &plan.settings, model_hash)),
            })
        })
        .collect();
    json!({ "config_hash": config_hash(&config), "config": config, "cells": cells })
}

fn completed(path: &Path, hash: &str) -> Option<RunSummary> {
    let text = std::fs::read_to_string(path).ok()?;
    read_summary(&text).filter(|s| s.config_hash == hash)
}

/// Runs every cell of the plan that is not already complete, on
/// `plan.threads` worker threads.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutcome, ExperimentError> {
    run_experiment_with(plan, &|_, _| {})
}

/// [`run_experiment`], reporting each finished cell.
pub fn run_experiment_with(
    plan: &ExperimentPlan,
    progress: &(dyn Fn(&RunSummary, bool) + Sync),
) -> Result<ExperimentOutcome, ExperimentError> {
    let cells = plan.cells();
    if cells.is_empty() {
        return Err(ExperimentError::Empty);
    }
    let model = plan_model(plan)?;
    let model_hash = model.as_ref().map(|(_, h)| h.as_str());
    let tasks = plan
        .problems
        .iter()
        .map(|p| materialize_task(p, plan.settings.data_seed).map_err(|source| ExperimentError::Task { id: p.id.clone(), source }))
        .collect::<Result<Vec<_>, _>>()?;

    let runs = plan.out.join("runs");
    std::fs::create_dir_all(&runs).map_err(io_err(&runs))?;
    let manifest_path = plan.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest(plan, model_hash)).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;

    let next = AtomicUsize::new(0);
    type CellOutcome = Result<(RunSummary, bool), ExperimentError>;
    let results: Mutex<Vec<(usize, CellOutcome)>> = Mutex::new(Vec::new());
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(cell) = cells.get(i) else { break };
        let p = &plan.problems[cell.problem];
        let hash = config_hash(&cell_config(p, cell.variant, cell.population, cell.seed, &plan.settings, model_hash));
        let path = plan.cell_file(cell);
        let outcome = match completed(&path, &hash) {
            Some(summary) => Ok((summary, false)),
            None => run_cell(
                p,
                &tasks[cell.problem],
                cell.variant,
                cell.population,
                cell.seed,
                &plan.settings,
                model.as_ref().map(|(m, _)| m),
                model_hash,
            )
            .and_then(|(_, log, summary)| {
                let tmp = path.with_extension("jsonl.tmp");
                std::fs::write(&tmp, log).map_err(io_err(&tmp))?;
                std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
                Ok((summary, true))
            }),
        };
        if let Ok((s, ran)) = &outcome {
            progress(s, *ran);
        }
        let failed = outcome.is_err();
        results.lock().unwrap().push((i, outcome));
        if failed {
            next.store(cells.len(), Ordering::Relaxed);
        }
    };
    std::thread::scope(|scope| {
        for _ in 1..plan.threads.max(1) {
            scope.spawn(worker);
        }
        worker();
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    let mut out = ExperimentOutcome::default();
    for (_, r) in results {
        let (summary, ran) = r?;
        if ran {
            out.ran += 1;
        } else {
            out.skipped += 1;
        }
        out.summaries.push(summary);
    }
    Ok(out)
}

/// Loads the model named by `path` and hashes its bytes.
pub fn load_model_with_hash(path: &Path) -> Result<(GatModel<f32>, String), ExperimentError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let model = read_model(&mut bytes.as_slice())?;
    Ok((model, sha256_hex(&bytes)))
}
