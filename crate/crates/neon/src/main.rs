use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use neon::corpus_file::CorpusFile;
use neon::experiment::{run_cell, run_experiment_with, load_model_with_hash, ExperimentPlan, RunSettings};
use neon::model_file::{list_tensors, save_model};
use neon::problems::{load_problems, materialize_task, ProblemSet};
use neon::report::Report;
use neon_core::evolution::Variant;
use neon_core::gat::{evaluate, train_observed, GatDims, GatModel, TrainConfig};
use neon_core::taskgen::{build_corpus, CorpusConfig, LabelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "neon", version, about = "Genetic programming with a learned grafting operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled training corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 560)]
        count: usize,
        #[arg(long, default_value_t = 60)]
        valid: usize,
        #[arg(long, default_value_t = 100)]
        examples: usize,
        /// Candidate items with a larger expansion front are redrawn.
        #[arg(long, default_value_t = 300)]
        max_front: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the graph network on a corpus.
    TrainGnn {
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the model.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 50)]
        patience: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the tensors stored in a model file.
    ModelInfo { model: PathBuf },
    /// Run one evolutionary run and print its log.
    Run {
        #[arg(long)]
        problems: PathBuf,
        #[arg(long)]
        problem: String,
        #[arg(long, default_value = "GP")]
        variant: Variant,
        #[arg(long, default_value_t = 100)]
        pop: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Write the log here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Run a grid of problems, variants, population sizes and seeds.
    Bench {
        #[arg(long)]
        problems: PathBuf,
        /// Restrict to these problem ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "GP,NEON,NEON-HH,NEON-ABL")]
        variant: Vec<Variant>,
        #[arg(long, value_delimiter = ',', default_value = "100")]
        pop: Vec<usize>,
        /// Number of seeds per cell, starting at `--seed`.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Print the tables of a finished experiment and write them as CSV.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SettingsArgs {
    #[arg(long, default_value_t = 50)]
    generations: usize,
    /// Most applications a single expansion may create.
    #[arg(long, default_value_t = neon_core::semgraph::DEFAULT_NODE_BUDGET)]
    budget: usize,
    /// Example rows the saliency map averages over (all when omitted).
    #[arg(long)]
    saliency_rows: Option<usize>,
    /// Seed of the example inputs sampled for each problem.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl SettingsArgs {
    fn settings(&self) -> RunSettings {
        RunSettings {
            generations: self.generations,
            data_seed: self.data_seed,
            expansion_budget: self.budget,
            saliency_rows: self.saliency_rows,
        }
    }
}

fn problems_from(path: &Path) -> Result<ProblemSet> {
    let set = load_problems(path).with_context(|| format!("reading {}", path.display()))?;
    for r in &set.rejected {
        eprintln!("warning: line {}: problem `{}` uses unsupported symbol `{}`, skipped", r.line, r.id, r.symbol);
    }
    if set.problems.is_empty() {
        eprintln!("warning: {} contains no usable problems", path.display());
    }
    Ok(set)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenCorpus { out, count, valid, examples, max_front, seed } => {
            let cfg = CorpusConfig {
                count,
                valid,
                examples,
                label: LabelConfig { max_front, ..LabelConfig::default() },
                ..CorpusConfig::default()
            };
            let corpus = build_corpus(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
            CorpusFile::from_corpus(&corpus, &cfg).save(&out)?;
            let nodes: usize = corpus.train.iter().map(|it| it.front().len()).sum();
            let pos: usize = corpus.train.iter().map(|it| it.positives()).sum();
            eprintln!(
                "{} training and {} validation items, {} front nodes, positive rate {:.4}",
                corpus.train.len(),
                corpus.valid.len(),
                nodes,
                pos as f64 / nodes.max(1) as f64
            );
        }
        Command::TrainGnn { corpus, out, epochs, patience, seed } => {
            let file = CorpusFile::load(&corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let mut c = file.rebuild(&CorpusConfig::default())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut model = GatModel::<f32>::init(GatDims::STANDARD, &mut rng);
            let cfg = TrainConfig { max_epochs: epochs, patience, ..TrainConfig::default() };
            let h = train_observed(&mut model, &mut c.train, &c.valid, &cfg, &mut rng, &mut |e| {
                eprintln!(
                    "epoch {:>4}  train {:.5}  valid {:.5}  accuracy {:.4}",
                    e.epoch, e.train_loss, e.valid_loss, e.valid_accuracy
                );
            })?;
            save_model(&out, &model)?;
            let ev = evaluate(&model, &c.valid, cfg.eval_rows);
            eprintln!(
                "initial train loss {:.5}, kept epoch {:?} ({:?}); validation loss {:.5}, accuracy {:.4} (majority {:.4})",
                h.initial_train.loss,
                h.best_epoch,
                h.stop,
                ev.loss,
                ev.accuracy,
                ev.majority_baseline()
            );
        }
        Command::ModelInfo { model } => {
            let mut total = 0;
            for t in list_tensors(&model)? {
                println!("{:<20} {:?}", t.name, t.dims);
                total += t.len();
            }
            println!("{total} parameters");
        }
        Command::Run { problems, problem, variant, pop, seed, model, out, settings } => {
            let set = problems_from(&problems)?;
            let Some(spec) = set.get(&problem) else { bail!("no problem `{problem}` in {}", problems.display()) };
            let settings = settings.settings();
            let task = materialize_task(spec, settings.data_seed)?;
            let loaded = match (&model, variant.needs_model()) {
                (Some(path), true) => Some(load_model_with_hash(path)?),
                (None, true) => bail!("variant {variant} needs --model"),
                _ => None,
            };
            let (m, hash) = match &loaded {
                Some((m, h)) => (Some(m), Some(h.as_str())),
                None => (None, None),
            };
            let (_, log, summary) = run_cell(spec, &task, variant, pop, seed, &settings, m, hash)?;
            match out {
                Some(path) => std::fs::write(path, log)?,
                None => std::io::stdout().write_all(log.as_bytes())?,
            }
            eprintln!("best MSE {:?}, success {}, size {}: {}", summary.best_mse, summary.success, summary.best_size, summary.best_tree);
        }
        Command::Bench { problems, only, variant, pop, seeds, seed, model, out, threads, settings } => {
            let mut set = problems_from(&problems)?;
            if !only.is_empty() {
                if let Some(missing) = only.iter().find(|id| set.get(id).is_none()) {
                    bail!("no problem `{missing}` in {}", problems.display());
                }
                set.problems.retain(|p| only.contains(&p.id));
            }
            let plan = ExperimentPlan {
                problems: set.problems,
                variants: variant,
                populations: pop,
                seeds: (seed..seed + seeds).collect(),
                settings: settings.settings(),
                model,
                out: out.clone(),
                threads,
            };
            let total = plan.cells().len();
            let done = std::sync::atomic::AtomicUsize::new(0);
            let outcome = run_experiment_with(&plan, &|s, ran| {
                let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                eprintln!(
                    "[{k}/{total}] {} {} p{} s{}: {}{}",
                    s.problem,
                    s.variant,
                    s.population,
                    s.seed,
                    if s.success { "solved" } else { "not solved" },
                    if ran { "" } else { " (cached)" }
                );
            })?;
            eprintln!("{} runs executed, {} reused", outcome.ran, outcome.skipped);
            print!("{}", Report::new(outcome.summaries).write(&out)?);
        }
        Command::Report { out } => {
            let (report, incomplete) = Report::load(&out).with_context(|| format!("reading {}", out.display()))?;
            if incomplete > 0 {
                eprintln!("warning: {incomplete} run files have no summary yet");
            }
            if report.runs.is_empty() {
                bail!("no finished runs under {}", out.display());
            }
            print!("{}", report.write(&out)?);
        }
    }
    Ok(())
}
