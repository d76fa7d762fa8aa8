use std::collections::BTreeMap;

use neon::experiment::{run_experiment, ExperimentPlan, RunSettings};
use neon::problems::parse_problems;
use neon::report::*;
use neon::runlog::RunSummary;
use neon_core::evolution::Variant;

fn summary(variant: Variant, arity: usize, population: usize, seed: u64, success: bool, size: usize) -> RunSummary {
    RunSummary {
        problem: format!("p{arity}"),
        arity,
        variant,
        population,
        seed,
        config_hash: String::new(),
        best_mse: Some(if success { 0.0 } else { 1.0 }),
        success,
        best_size: size,
        best_tree: "x0".into(),
        generations: 50,
    }
}

#[test]
fn failed_runs_show_the_no_data_marker() {
    let r = Report::new(vec![summary(Variant::Gp, 2, 100, 0, false, 9), summary(Variant::Gp, 2, 100, 1, false, 3)]);
    let t = r.size_table();
    assert_eq!(t.rows, vec![vec!["GP", "2", NO_DATA], vec!["GP", "all", NO_DATA]]);
    assert_eq!(r.success_table().rows, vec![vec!["GP", "0.0000"]]);
    assert_eq!(r.by_variant(Variant::Gp).mean_solved_size(), None);
}

#[test]
fn single_success_sets_the_mean_size() {
    let r = Report::new(vec![summary(Variant::Neon, 3, 200, 0, true, 5), summary(Variant::Neon, 3, 200, 1, false, 40)]);
    assert_eq!(r.by_variant(Variant::Neon).mean_solved_size(), Some(5.0));
    assert_eq!(r.size_table().rows[0], vec!["NEON", "3", "5.0"]);
    assert_eq!(r.success_table().rows[0], vec!["NEON", "0.5000"]);
}

#[test]
fn tables_have_a_row_per_group_and_a_column_per_population() {
    let mut runs = Vec::new();
    for (i, v) in Variant::ALL.into_iter().enumerate() {
        for pop in [100, 200] {
            for arity in [2, 3] {
                runs.push(summary(v, arity, pop, 0, (i + arity) % 2 == 0, 4 + i));
            }
        }
    }
    let r = Report::new(runs);
    let t1 = r.success_table();
    assert_eq!(t1.header, vec!["variant", "pop 100", "pop 200"]);
    assert_eq!(t1.rows.len(), 4);
    assert_eq!(r.success_by_arity_table().rows.len(), 8);
    assert_eq!(r.size_table().rows.len(), 12);
    let csv = t1.to_csv();
    assert_eq!(csv.lines().next(), Some("variant,pop 100,pop 200"));
    assert!(r.size_table().to_text().contains("NEON-HH"));
}

#[test]
fn rates_match_an_independent_recount_of_the_raw_files() {
    let dir = tempfile::tempdir().unwrap();
    let problems = parse_problems("a\t1\t(add x0 1)\t1:5\t30\nb\t2\t(mul (sin x0) x1)\t1:5,1:5\t30\n").unwrap().problems;
    let plan = ExperimentPlan {
        problems,
        variants: vec![Variant::Gp, Variant::NeonAbl],
        populations: vec![15, 25],
        seeds: (0..4).collect(),
        settings: RunSettings { generations: 6, expansion_budget: 300, ..RunSettings::default() },
        model: None,
        out: dir.path().to_path_buf(),
        threads: 1,
    };
    run_experiment(&plan).unwrap();
    let (report, incomplete) = Report::load(dir.path()).unwrap();
    assert_eq!((report.runs.len(), incomplete), (32, 0));

    // recount straight from the JSON text
    let mut counts: BTreeMap<(String, u64), (usize, usize)> = BTreeMap::new();
    for e in std::fs::read_dir(dir.path().join("runs")).unwrap() {
        let text = std::fs::read_to_string(e.unwrap().path()).unwrap();
        let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
        assert_eq!(last["type"], "summary");
        let c = counts.entry((last["variant"].as_str().unwrap().into(), last["population"].as_u64().unwrap())).or_default();
        c.0 += 1;
        c.1 += last["success"].as_bool().unwrap() as usize;
    }
    let t = report.success_table();
    for row in &t.rows {
        for (k, pop) in [15u64, 25].iter().enumerate() {
            let (runs, wins) = counts[&(row[0].clone(), *pop)];
            assert_eq!(row[k + 1], format!("{:.4}", wins as f64 / runs as f64));
        }
    }
    let text = report.write(dir.path()).unwrap();
    assert!(text.contains("Success rate by arity"));
    for f in ["table1_success.csv", "table2_success_by_arity.csv", "table3_solved_size.csv"] {
        assert!(dir.path().join(f).exists());
    }
}
