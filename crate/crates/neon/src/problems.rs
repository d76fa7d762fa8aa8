//! Benchmark problem files.
//!
//! One problem per line, tab separated:
//!
//! ```text
//! id  arity  formula  ranges  [n]
//! ```
//!
//! `formula` is a prefix s-expression over `x0..x{arity-1}`, `ranges` is a
//! comma-separated list of `lo:hi` per variable and `n` the number of
//! examples (100 when omitted). Blank lines and lines starting with `#` are
//! ignored.

use std::path::Path;

use neon_core::expr::parse;
use neon_core::taskgen::{TaskgenError, MAX_CONSECUTIVE_REJECTIONS};
use neon_core::{DataMatrix, Expr, SrTask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub id: String,
    pub arity: usize,
    pub formula: Expr,
    /// Formula as written in the file.
    pub source: String,
    pub ranges: Vec<(f64, f64)>,
    pub n: usize,
}

/// A problem skipped because its formula uses a symbol outside the DSL.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejected {
    pub line: usize,
    pub id: String,
    pub symbol: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemSet {
    pub problems: Vec<ProblemSpec>,
    pub rejected: Vec<Rejected>,
}

impl ProblemSet {
    pub fn get(&self, id: &str) -> Option<&ProblemSpec> {
        self.problems.iter().find(|p| p.id == id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate problem id `{id}`")]
    Duplicate { line: usize, id: String },
}

fn syntax(line: usize, message: impl Into<String>) -> ProblemError {
    ProblemError::Syntax { line, message: message.into() }
}

fn parse_ranges(text: &str, line: usize) -> Result<Vec<(f64, f64)>, ProblemError> {
    text.split(',')
        .map(|r| {
            let (lo, hi) = r.trim().split_once(':').ok_or_else(|| syntax(line, format!("range `{r}` is not lo:hi")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| syntax(line, format!("bad range bound `{lo}`")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| syntax(line, format!("bad range bound `{hi}`")))?;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(syntax(line, format!("empty or infinite range {lo}:{hi}")));
            }
            Ok((lo, hi))
        })
        .collect()
}

pub fn parse_problems(text: &str) -> Result<ProblemSet, ProblemError> {
    let mut set = ProblemSet::default();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if cols.len() < 4 || cols.len() > 5 {
            return Err(syntax(line, format!("expected 4 or 5 tab-separated columns, found {}", cols.len())));
        }
        let id = cols[0].to_string();
        if id.is_empty() {
            return Err(syntax(line, "empty id"));
        }
        let arity: usize = cols[1].parse().map_err(|_| syntax(line, format!("bad arity `{}`", cols[1])))?;
        let formula = match parse(cols[2]) {
            Ok(f) => f,
            Err(e) => match e.unknown_symbol() {
                Some(symbol) => {
                    set.rejected.push(Rejected { line, id, symbol: symbol.to_string() });
                    continue;
                }
                None => return Err(syntax(line, e.to_string())),
            },
        };
        formula.check_arity(arity).map_err(|e| syntax(line, e.to_string()))?;
        let ranges = parse_ranges(cols[3], line)?;
        if ranges.len() != arity {
            return Err(syntax(line, format!("{} ranges for arity {arity}", ranges.len())));
        }
        let n = match cols.get(4) {
            Some(s) => s.parse().ok().filter(|&n| n > 0).ok_or_else(|| syntax(line, format!("bad sample count `{s}`")))?,
            None => DEFAULT_SAMPLES,
        };
        if set.get(&id).is_some() {
            return Err(ProblemError::Duplicate { line, id });
        }
        set.problems.push(ProblemSpec { id, arity, formula, source: cols[2].to_string(), ranges, n });
    }
    Ok(set)
}

pub fn load_problems(path: &Path) -> Result<ProblemSet, ProblemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ProblemError::Io { path: path.display().to_string(), source })?;
    parse_problems(&text)
}

fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Samples `spec.n` input rows uniformly within the ranges, keeping only
/// rows where the formula is finite. The draw depends only on the problem id
/// and `seed`.
pub fn materialize_task(spec: &ProblemSpec, seed: u64) -> Result<SrTask, TaskgenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id_hash(&spec.id));
    let mut rows = Vec::with_capacity(spec.n);
    let mut targets = Vec::with_capacity(spec.n);
    let mut rejected = 0;
    while rows.len() < spec.n {
        let row: Vec<f64> = spec.ranges.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let y = spec.formula.eval_row(&row);
        if y.is_finite() {
            rows.push(row);
            targets.push(y);
            rejected = 0;
        } else {
            rejected += 1;
            if rejected > MAX_CONSECUTIVE_REJECTIONS {
                return Err(TaskgenError::NowhereFinite(MAX_CONSECUTIVE_REJECTIONS));
            }
        }
    }
    Ok(SrTask::new(spec.id.clone(), DataMatrix::from_rows(spec.arity, &rows), targets, Some(spec.formula.clone())))
}
