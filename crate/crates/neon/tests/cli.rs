use std::path::Path;
use std::process::Command;

fn neon() -> Command {
    Command::new(env!("CARGO_BIN_EXE_neon"))
}

fn suite() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/problems.tsv").display().to_string()
}

#[test]
fn run_prints_a_deterministic_log() {
    let args = ["run", "--problems", &suite(), "--problem", "I.12.1", "--pop", "30", "--generations", "5", "--seed", "4"];
    let a = neon().args(args).output().unwrap();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = neon().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().last().unwrap().contains(r#""type":"summary""#));
    assert!(String::from_utf8_lossy(&a.stderr).contains("unsupported symbol `tanh`"));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let out = neon().args(["run", "--problems", &suite(), "--problem", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no problem `nope`"));
    let out = neon().args(["run", "--problems", &suite(), "--problem", "I.12.1", "--variant", "NEON"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs --model"));
    let out = neon().args(["run", "--problems", &suite(), "--problem", "I.12.1", "--variant", "SGP"]).output().unwrap();
    assert!(!out.status.success());
    let out = neon().args(["report", "--out", "/nonexistent/dir"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn corpus_training_and_bench_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |f: &str| dir.path().join(f).display().to_string();
    let ok = |args: &[&str]| {
        let out = neon().args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    ok(&["gen-corpus", "--out", &d("c.tsv"), "--count", "6", "--valid", "2", "--examples", "10", "--seed", "1"]);
    ok(&["train-gnn", "--corpus", &d("c.tsv"), "--out", &d("m.bin"), "--epochs", "1"]);
    let info = ok(&["model-info", &d("m.bin")]);
    assert!(String::from_utf8_lossy(&info.stdout).contains("218881 parameters"));
    let bench = ok(&[
        "bench", "--problems", &suite(), "--only", "I.12.1,I.14.3", "--variant", "GP,NEON", "--pop", "10", "--seeds", "1",
        "--generations", "1", "--budget", "200", "--saliency-rows", "1", "--model", &d("m.bin"), "--out", &d("exp"),
    ]);
    assert!(String::from_utf8_lossy(&bench.stdout).contains("Success rate"));
    assert_eq!(std::fs::read_dir(dir.path().join("exp/runs")).unwrap().count(), 4);
    let report = ok(&["report", "--out", &d("exp")]);
    assert_eq!(report.stdout, bench.stdout);
}
