//! Text format for training corpora.
//!
//! A corpus is stored as the recipe for each item rather than the expanded
//! graphs: the seed that drew the example inputs, the arity, the split
//! depth and the origin expression. Items are rebuilt on load.
//!
//! ```text
//! # neon corpus v1
//! # examples=100 budget=10000 max_front=300
//! train<TAB>seed<TAB>arity<TAB>depth<TAB>expression
//! valid<TAB>...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use neon_core::expr::parse;
use neon_core::taskgen::{rebuild_corpus, Corpus, CorpusConfig, CorpusRecord, TaskgenError};

const TITLE: &str = "# neon corpus v1";

#[derive(Debug, thiserror::Error)]
pub enum CorpusFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rebuilding items: {0}")]
    Rebuild(#[from] TaskgenError),
}

fn syntax(line: usize, message: impl Into<String>) -> CorpusFileError {
    CorpusFileError::Syntax { line, message: message.into() }
}

/// Records plus the settings needed to rebuild them.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusFile {
    pub examples: usize,
    pub budget: usize,
    pub max_front: usize,
    pub train: Vec<CorpusRecord>,
    pub valid: Vec<CorpusRecord>,
}

impl CorpusFile {
    pub fn from_corpus(corpus: &Corpus, cfg: &CorpusConfig) -> Self {
        CorpusFile {
            examples: cfg.examples,
            budget: cfg.label.budget,
            max_front: cfg.label.max_front,
            train: corpus.train_records.clone(),
            valid: corpus.valid_records.clone(),
        }
    }

    /// Applies the stored settings on top of `base`.
    pub fn config(&self, base: &CorpusConfig) -> CorpusConfig {
        let mut cfg = base.clone();
        cfg.examples = self.examples;
        cfg.label.budget = self.budget;
        cfg.label.max_front = self.max_front;
        cfg.count = self.train.len() + self.valid.len();
        cfg.valid = self.valid.len();
        cfg
    }

    pub fn rebuild(&self, base: &CorpusConfig) -> Result<Corpus, CorpusFileError> {
        Ok(rebuild_corpus(&self.train, &self.valid, &self.config(base))?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{TITLE}").unwrap();
        writeln!(s, "# examples={} budget={} max_front={}", self.examples, self.budget, self.max_front).unwrap();
        for (split, records) in [("train", &self.train), ("valid", &self.valid)] {
            for r in records {
                writeln!(s, "{split}\t{}\t{}\t{}\t{}", r.seed, r.arity, r.split_depth, r.origin).unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CorpusFileError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == TITLE => {}
            _ => return Err(syntax(1, "missing corpus header")),
        }
        let (examples, budget, max_front) = match lines.next() {
            Some((k, l)) => parse_settings(l, k + 1)?,
            None => return Err(syntax(2, "missing settings line")),
        };
        let mut out = CorpusFile { examples, budget, max_front, train: Vec::new(), valid: Vec::new() };
        for (k, l) in lines {
            let line = k + 1;
            if l.trim().is_empty() || l.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != 5 {
                return Err(syntax(line, format!("expected 5 columns, found {}", cols.len())));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| syntax(line, format!("bad number `{s}`")));
            let origin = parse(cols[4]).map_err(|e| syntax(line, e.to_string()))?;
            let record =
                CorpusRecord { seed: num(cols[1])?, arity: num(cols[2])? as usize, split_depth: num(cols[3])? as usize, origin };
            match cols[0] {
                "train" => out.train.push(record),
                "valid" => out.valid.push(record),
                other => return Err(syntax(line, format!("unknown split `{other}`"))),
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusFileError> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusFileError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_settings(l: &str, line: usize) -> Result<(usize, usize, usize), CorpusFileError> {
    let body = l.strip_prefix('#').ok_or_else(|| syntax(line, "missing settings line"))?;
    let (mut examples, mut budget, mut max_front) = (None, None, None);
    for kv in body.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| syntax(line, format!("bad setting `{kv}`")))?;
        let v: usize = v.parse().map_err(|_| syntax(line, format!("bad value in `{kv}`")))?;
        match k {
            "examples" => examples = Some(v),
            "budget" => budget = Some(v),
            "max_front" => max_front = Some(v),
            _ => return Err(syntax(line, format!("unknown setting `{k}`"))),
        }
    }
    match (examples, budget, max_front) {
        (Some(e), Some(b), Some(m)) => Ok((e, b, m)),
        _ => Err(syntax(line, "settings need examples, budget and max_front")),
    }
}
