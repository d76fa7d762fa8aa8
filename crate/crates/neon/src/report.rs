//! Success-rate and solution-size tables computed from run summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use neon_core::evolution::Variant;

use crate::runlog::{read_summary, RunSummary};

/// Marker for cells without data.
pub const NO_DATA: &str = "--";

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tally {
    pub runs: usize,
    pub successes: usize,
    /// Sum of best-tree sizes over successful runs.
    pub solved_size: usize,
}

impl Tally {
    fn add(&mut self, s: &RunSummary) {
        self.runs += 1;
        if s.success {
            self.successes += 1;
            self.solved_size += s.best_size;
        }
    }

    pub fn success_rate(&self) -> Option<f64> {
        (self.runs > 0).then(|| self.successes as f64 / self.runs as f64)
    }

    pub fn mean_solved_size(&self) -> Option<f64> {
        (self.successes > 0).then(|| self.solved_size as f64 / self.successes as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub runs: Vec<RunSummary>,
}

/// A rendered table: header row plus data rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let cols = self.header.len();
        let width: Vec<usize> = (0..cols)
            .map(|c| self.rows.iter().map(|r| r[c].len()).chain([self.header[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                if c == 0 {
                    write!(s, "{:<w$}", cell, w = width[c]).unwrap();
                } else {
                    write!(s, "  {:>w$}", cell, w = width[c]).unwrap();
                }
            }
            s.trim_end().to_string()
        };
        let mut out = format!("{}\n{}\n", self.title, line(&self.header));
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn fmt_opt(x: Option<f64>, decimals: usize) -> String {
    x.map_or_else(|| NO_DATA.to_string(), |v| format!("{v:.decimals$}"))
}

impl Report {
    pub fn new(mut runs: Vec<RunSummary>) -> Self {
        runs.sort_by(|a, b| {
            (a.variant, a.population, &a.problem, a.seed).cmp(&(b.variant, b.population, &b.problem, b.seed))
        });
        Report { runs }
    }

    /// Reads the summary line of every `runs/*.jsonl` file under `dir`.
    /// Files without a summary (runs still in progress) are counted and
    /// skipped.
    pub fn load(dir: &Path) -> std::io::Result<(Self, usize)> {
        let mut runs = Vec::new();
        let mut incomplete = 0;
        let mut paths: Vec<_> = std::fs::read_dir(dir.join("runs"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        paths.sort();
        for p in paths {
            match read_summary(&std::fs::read_to_string(&p)?) {
                Some(s) => runs.push(s),
                None => incomplete += 1,
            }
        }
        Ok((Report::new(runs), incomplete))
    }

    pub fn variants(&self) -> Vec<Variant> {
        self.runs.iter().map(|r| r.variant).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn populations(&self) -> Vec<usize> {
        self.runs.iter().map(|r| r.population).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.runs.iter().map(|r| r.arity).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Tally of the runs accepted by `keep`.
    pub fn tally(&self, keep: impl Fn(&RunSummary) -> bool) -> Tally {
        let mut t = Tally::default();
        for r in self.runs.iter().filter(|r| keep(r)) {
            t.add(r);
        }
        t
    }

    pub fn by_variant(&self, v: Variant) -> Tally {
        self.tally(|r| r.variant == v)
    }

    fn grouped<K: Ord>(&self, key: impl Fn(&RunSummary) -> K) -> BTreeMap<K, Tally> {
        let mut m: BTreeMap<K, Tally> = BTreeMap::new();
        for r in &self.runs {
            m.entry(key(r)).or_default().add(r);
        }
        m
    }

    fn pop_header(&self, lead: &[&str]) -> Vec<String> {
        lead.iter().map(|s| s.to_string()).chain(self.populations().iter().map(|p| format!("pop {p}"))).collect()
    }

    /// Success rate per variant and population size.
    pub fn success_table(&self) -> Table {
        let g = self.grouped(|r| (r.variant, r.population));
        let rows = self
            .variants()
            .into_iter()
            .map(|v| {
                let mut row = vec![v.to_string()];
                row.extend(self.populations().iter().map(|&p| fmt_opt(g.get(&(v, p)).and_then(Tally::success_rate), 4)));
                row
            })
            .collect();
        Table { title: "Success rate".into(), header: self.pop_header(&["variant"]), rows }
    }

    /// Success rate per variant, arity and population size.
    pub fn success_by_arity_table(&self) -> Table {
        let g = self.grouped(|r| (r.variant, r.arity, r.population));
        let mut rows = Vec::new();
        for v in self.variants() {
            for a in self.arities() {
                let mut row = vec![v.to_string(), a.to_string()];
                row.extend(self.populations().iter().map(|&p| fmt_opt(g.get(&(v, a, p)).and_then(Tally::success_rate), 4)));
                rows.push(row);
            }
        }
        Table { title: "Success rate by arity".into(), header: self.pop_header(&["variant", "arity"]), rows }
    }

    /// Mean size of the solutions of successful runs per variant, arity and
    /// population size, with an `all` row per variant.
    pub fn size_table(&self) -> Table {
        let g = self.grouped(|r| (r.variant, r.arity, r.population));
        let all = self.grouped(|r| (r.variant, r.population));
        let mut rows = Vec::new();
        for v in self.variants() {
            for a in self.arities() {
                let mut row = vec![v.to_string(), a.to_string()];
                row.extend(
                    self.populations().iter().map(|&p| fmt_opt(g.get(&(v, a, p)).and_then(Tally::mean_solved_size), 1)),
                );
                rows.push(row);
            }
            let mut row = vec![v.to_string(), "all".into()];
            row.extend(self.populations().iter().map(|&p| fmt_opt(all.get(&(v, p)).and_then(Tally::mean_solved_size), 1)));
            rows.push(row);
        }
        Table { title: "Mean size of solved expressions".into(), header: self.pop_header(&["variant", "arity"]), rows }
    }

    pub fn tables(&self) -> [(&'static str, Table); 3] {
        [
            ("table1_success.csv", self.success_table()),
            ("table2_success_by_arity.csv", self.success_by_arity_table()),
            ("table3_solved_size.csv", self.size_table()),
        ]
    }

    /// Writes the CSV files into `dir` and returns the console rendering.
    pub fn write(&self, dir: &Path) -> std::io::Result<String> {
        let mut text = String::new();
        for (file, table) in self.tables() {
            std::fs::write(dir.join(file), table.to_csv())?;
            text.push_str(&table.to_text());
            text.push('\n');
        }
        Ok(text)
    }
}
