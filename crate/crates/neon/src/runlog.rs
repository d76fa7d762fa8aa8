//! JSON-lines run logs: one line per generation and a closing summary.
//!
//! Non-finite numbers are written as `null`. Wall-clock time is left out so
//! that a rerun with the same configuration writes the same bytes.

use neon_core::evolution::{GenerationRecord, RunResult, Variant};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationLine {
    pub generation: usize,
    pub best_mse: Option<f64>,
    pub generation_best_mse: Option<f64>,
    pub mean_mse: Option<f64>,
    pub non_finite: usize,
    pub mean_size: f64,
    pub best_size: usize,
    pub library_fill: usize,
    pub pushed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub arity: usize,
    pub variant: Variant,
    pub population: usize,
    pub seed: u64,
    pub config_hash: String,
    pub best_mse: Option<f64>,
    pub success: bool,
    pub best_size: usize,
    pub best_tree: String,
    pub generations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Generation(GenerationLine),
    Summary(RunSummary),
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&GenerationRecord> for GenerationLine {
    fn from(r: &GenerationRecord) -> Self {
        GenerationLine {
            generation: r.generation,
            best_mse: finite(r.best_mse),
            generation_best_mse: finite(r.generation_best_mse),
            mean_mse: finite(r.mean_mse),
            non_finite: r.non_finite,
            mean_size: r.mean_size,
            best_size: r.best_size,
            library_fill: r.library_fill,
            pushed: r.pushed,
        }
    }
}

/// Identifies a run inside an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMeta {
    pub problem: String,
    pub arity: usize,
    pub variant: Variant,
    pub population: usize,
    pub seed: u64,
    pub config_hash: String,
}

pub fn summarize(meta: &RunMeta, result: &RunResult) -> RunSummary {
    RunSummary {
        problem: meta.problem.clone(),
        arity: meta.arity,
        variant: meta.variant,
        population: meta.population,
        seed: meta.seed,
        config_hash: meta.config_hash.clone(),
        best_mse: finite(result.best_mse),
        success: result.success,
        best_size: result.best_size,
        best_tree: result.best_tree.to_string(),
        generations: result.generations.len().saturating_sub(1),
    }
}

/// The full log of a run, newline terminated.
pub fn render_log(meta: &RunMeta, result: &RunResult) -> String {
    let mut out = String::new();
    for r in &result.generations {
        out.push_str(&serde_json::to_string(&LogLine::Generation(r.into())).expect("log lines serialize"));
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&LogLine::Summary(summarize(meta, result))).expect("log lines serialize"));
    out.push('\n');
    out
}

/// The summary on the last line of a log, if it has one.
pub fn read_summary(text: &str) -> Option<RunSummary> {
    let last = text.lines().rev().find(|l| !l.trim().is_empty())?;
    match serde_json::from_str(last).ok()? {
        LogLine::Summary(s) => Some(s),
        LogLine::Generation(_) => None,
    }
}

pub fn parse_log(text: &str) -> Result<Vec<LogLine>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
