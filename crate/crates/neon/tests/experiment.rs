use std::fs;
use std::path::Path;

use neon::experiment::*;
use neon::model_file::save_model;
use neon::problems::{parse_problems, ProblemSpec};
use neon::report::Report;
use neon_core::evolution::Variant;
use neon_core::featurize::FEATURE_DIM;
use neon_core::gat::{GatDims, GatModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problems() -> Vec<ProblemSpec> {
    parse_problems("sum\t2\t(add x0 x1)\t1:5,1:5\t30\nsq\t1\t(square x0)\t-2:2\t30\n").unwrap().problems
}

fn plan(out: &Path) -> ExperimentPlan {
    ExperimentPlan {
        problems: problems(),
        variants: vec![Variant::Gp, Variant::NeonAbl],
        populations: vec![20],
        seeds: vec![0, 1, 2],
        settings: RunSettings { generations: 4, expansion_budget: 300, ..RunSettings::default() },
        model: None,
        out: out.to_path_buf(),
        threads: 2,
    }
}

fn run_files(out: &Path) -> Vec<(String, String)> {
    let mut v: Vec<_> = fs::read_dir(out.join("runs"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn one_file_per_cell_and_reruns_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&plan(a.path())).unwrap();
    assert_eq!((outcome.ran, outcome.skipped, outcome.summaries.len()), (12, 0, 12));
    let files = run_files(a.path());
    assert_eq!(files.len(), 12);
    assert!(files.iter().any(|(n, _)| n == "sum__NEON-ABL__p20__s2.jsonl"));
    let mut single = plan(b.path());
    single.threads = 1;
    run_experiment(&single).unwrap();
    assert_eq!(run_files(b.path()), files);
    assert!(a.path().join("manifest.json").exists());
}

#[test]
fn interrupted_experiments_resume() {
    let dir = tempfile::tempdir().unwrap();
    let p = plan(dir.path());
    run_experiment(&p).unwrap();
    let before = run_files(dir.path());
    let victim = dir.path().join("runs/sq__GP__p20__s1.jsonl");
    let text = fs::read_to_string(&victim).unwrap();
    // cut the summary off, as if the run had been killed while writing
    let partial: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    fs::write(&victim, partial).unwrap();
    fs::remove_file(dir.path().join("runs/sum__NEON-ABL__p20__s0.jsonl")).unwrap();
    let outcome = run_experiment(&p).unwrap();
    assert_eq!((outcome.ran, outcome.skipped), (2, 10));
    assert_eq!(run_files(dir.path()), before);

    // a changed setting invalidates every cell
    let mut changed = p.clone();
    changed.settings.generations = 3;
    assert_eq!(run_experiment(&changed).unwrap().ran, 12);
}

#[test]
fn manifest_hash_tracks_every_config_field() {
    let dir = tempfile::tempdir().unwrap();
    let base = plan(dir.path());
    let hash = |p: &ExperimentPlan, m: Option<&str>| manifest(p, m)["config_hash"].as_str().unwrap().to_string();
    let h0 = hash(&base, None);
    let mut other = base.clone();
    other.out = dir.path().join("elsewhere");
    other.threads = 7;
    assert_eq!(hash(&other, None), h0);

    type Edit = Box<dyn Fn(&mut ExperimentPlan)>;
    let edits: Vec<Edit> = vec![
        Box::new(|p| p.variants.push(Variant::Neon)),
        Box::new(|p| p.populations[0] = 21),
        Box::new(|p| p.seeds.push(9)),
        Box::new(|p| p.settings.generations += 1),
        Box::new(|p| p.settings.data_seed = 5),
        Box::new(|p| p.settings.expansion_budget += 1),
        Box::new(|p| p.settings.saliency_rows = Some(2)),
        Box::new(|p| p.problems[0].ranges[0].1 = 6.0),
        Box::new(|p| p.problems[1].n = 31),
        Box::new(|p| p.problems[1].id = "sq2".into()),
    ];
    let mut seen = vec![h0.clone()];
    for edit in edits {
        let mut p = base.clone();
        edit(&mut p);
        let h = hash(&p, None);
        assert!(!seen.contains(&h));
        seen.push(h);
    }
    assert_ne!(hash(&base, Some("beef")), h0);
}

#[test]
fn learned_variants_need_a_model_before_anything_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(dir.path());
    p.variants = vec![Variant::Gp, Variant::Neon];
    assert!(matches!(run_experiment(&p), Err(ExperimentError::MissingModel(Variant::Neon))));
    assert!(!dir.path().join("runs").exists());
    p.model = Some(dir.path().join("missing.bin"));
    assert!(matches!(run_experiment(&p), Err(ExperimentError::Io { .. })));
}

#[test]
fn model_hash_only_keys_learned_cells() {
    let dir = tempfile::tempdir().unwrap();
    let dims = GatDims { input: FEATURE_DIM, hidden: 8, heads: 2, layers: 1 };
    let path = dir.path().join("m.bin");
    save_model(&path, &GatModel::<f32>::init(dims, &mut ChaCha8Rng::seed_from_u64(0))).unwrap();
    let mut p = plan(&dir.path().join("out"));
    p.variants = vec![Variant::Gp, Variant::Neon, Variant::NeonHh];
    p.seeds = vec![0];
    p.model = Some(path.clone());
    assert_eq!(run_experiment(&p).unwrap().ran, 6);
    save_model(&path, &GatModel::<f32>::init(dims, &mut ChaCha8Rng::seed_from_u64(1))).unwrap();
    let again = run_experiment(&p).unwrap();
    assert_eq!((again.ran, again.skipped), (4, 2));
    let report = Report::new(again.summaries);
    assert_eq!(report.variants(), vec![Variant::Gp, Variant::Neon, Variant::NeonHh]);
}
