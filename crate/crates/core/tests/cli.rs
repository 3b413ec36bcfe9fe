use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use neurols::instances::{Instance, InstanceSet};
use neurols::policies::{read_policy_file, NeuroLsPolicy};
use neurols::search::TRACE_COLUMNS;
use neurols::ObservationKind;

fn neurols(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurols")).args(args).output().expect("spawn neurols")
}

fn ok(args: &[&str]) -> Output {
    let out = neurols(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn generation_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        ok(&["generate", "--kind", "nk", "--n", "16", "--k", "2", "--count", "4", "--seed", "5", "--out", p(d)]);
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let set = InstanceSet::load(&a.join("manifest.json")).unwrap();
    assert_eq!(set.len(), 4);
    let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
    assert!(manifest.contains("command=generate"));
}

#[test]
fn generated_qubo_is_symmetric() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("q");
    ok(&[
        "generate", "--kind", "qubo", "--n", "24", "--m-frac", "0.2", "--family", "imp", "--count", "3", "--seed", "9", "--out",
        p(&dir),
    ]);
    let set = InstanceSet::load(&dir.join("manifest.json")).unwrap();
    for inst in &set.instances {
        let Instance::Qubo(q) = inst else { panic!("expected qubo") };
        for i in 0..q.n() {
            for j in 0..q.n() {
                assert_eq!(q.get(i, j), q.get(j, i));
            }
        }
    }
}

#[test]
fn empty_sets_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = neurols(&["generate", "--kind", "nk", "--n", "8", "--count", "0", "--seed", "1", "--out", p(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("count"));

    let manifest = tmp.path().join("manifest.json");
    fs::write(&manifest, r#"{"role":"test","master_seed":1,"entries":[]}"#).unwrap();
    let out = neurols(&["evaluate", "--test", p(&manifest), "--out", p(&tmp.path().join("e"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no instances"));
}

#[test]
fn missing_config_field_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "n = 16\nobservation = \"O4\"\nmaster_seed = 1\n").unwrap();
    let out = neurols(&["train", "--config", p(&cfg), "--out", p(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`k`"));
}

const TOY: &str = "n = 16\nk = 2\nobservation = \"O4\"\nmaster_seed = 3\nq = 3\nr = 2\ngenerations = 5\nruns = 1\nvalidation_instances = 3\nvalidation_restarts = 2\n";

#[test]
fn toy_training_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("toy.toml");
    fs::write(&cfg, TOY).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let start = Instant::now();
    ok(&["train", "--config", p(&cfg), "--out", p(&a)]);
    assert!(start.elapsed() < Duration::from_secs(30), "{:?}", start.elapsed());
    ok(&["--workers", "1", "train", "--config", p(&cfg), "--out", p(&b)]);
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(b.join("report.csv")).unwrap());
    assert_eq!(fs::read(a.join("champion.json")).unwrap(), fs::read(b.join("champion.json")).unwrap());

    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert!(lines.next().unwrap().starts_with("# provenance command=train"));
    assert_eq!(lines.next().unwrap(), "generation,run,train_F,valid_F");
    assert!(lines.count() >= 5);

    // a finished checkpoint is picked up again without retraining
    ok(&["train", "--config", p(&cfg), "--out", p(&a)]);
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(b.join("report.csv")).unwrap());

    let policy = read_policy_file(&a.join("champion.json")).unwrap();
    assert_eq!(policy.kind(), ObservationKind::O4);
}

#[test]
fn evaluate_and_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let set = tmp.path().join("set");
    ok(&["generate", "--kind", "nk", "--n", "16", "--k", "2", "--count", "5", "--restarts", "2", "--seed", "4", "--out", p(&set)]);
    let manifest = set.join("manifest.json");

    let base = tmp.path().join("base");
    ok(&["evaluate", "--test", p(&manifest), "--lambda", "4", "--out", p(&base)]);
    let summary = fs::read_to_string(base.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2 + 3);
    let again = tmp.path().join("again");
    ok(&["evaluate", "--test", p(&manifest), "--lambda", "4", "--out", p(&again)]);
    assert_eq!(fs::read(base.join("scores.csv")).unwrap(), fs::read(again.join("scores.csv")).unwrap());
    assert!(!neurols(&["evaluate", "--test", p(&manifest), "--strategy", "es", "--out", p(&again)]).status.success());
    assert!(!neurols(&["evaluate", "--test", p(&manifest), "--strategy", "neuro", "--out", p(&again)]).status.success());

    let policy_path = tmp.path().join("pol.json");
    let theta: Vec<f64> = (0..81).map(|i| ((i % 9) as f64 - 4.0) / 3.0).collect();
    NeuroLsPolicy::standard(ObservationKind::O3, theta).unwrap().save(&policy_path, None).unwrap();
    let ev = tmp.path().join("ev");
    ok(&["evaluate", "--test", p(&manifest), "--policy", p(&policy_path), "--out", p(&ev)]);
    let welch = fs::read_to_string(ev.join("welch.csv")).unwrap();
    assert_eq!(welch.lines().count(), 2 + 2);

    let an = tmp.path().join("an");
    ok(&["analyze", "--policy", p(&policy_path), "--test", p(&manifest), "--trajectories", "3", "--out", p(&an)]);
    for t in 0..3 {
        let trace = fs::read_to_string(an.join(format!("trace_{t:03}.csv"))).unwrap();
        let mut lines = trace.lines().skip_while(|l| l.starts_with('#'));
        assert_eq!(lines.next().unwrap(), TRACE_COLUMNS.join(","));
        assert_eq!(lines.count(), 32);
    }
    let response = fs::read_to_string(an.join("response.csv")).unwrap();
    let rows: Vec<_> = response.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "x,g");
    assert_eq!(rows.len() - 1, 3 * 32 * 16);
}

#[test]
fn mixed_sizes_need_a_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["generate", "--kind", "nk", "--n", "12", "--count", "2", "--seed", "1", "--out", p(&a)]);
    ok(&["generate", "--kind", "nk", "--n", "16", "--count", "2", "--seed", "1", "--out", p(&b)]);
    let mut ma: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let mb: serde_json::Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    for e in mb["entries"].as_array().unwrap() {
        let mut e = e.clone();
        e["path"] = format!("../b/{}", e["path"].as_str().unwrap()).into();
        ma["entries"].as_array_mut().unwrap().push(e);
    }
    let mixed = a.join("mixed.json");
    fs::write(&mixed, ma.to_string()).unwrap();
    let out = neurols(&["evaluate", "--test", p(&mixed), "--out", p(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-mixed-sizes"));
    ok(&["evaluate", "--test", p(&mixed), "--allow-mixed-sizes", "--out", p(&tmp.path().join("o"))]);
}

#[test]
fn calibrate_lambda_writes_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&[
        "calibrate-lambda", "--n", "8", "--k", "1", "--instances", "2", "--restarts", "2", "--seed", "1", "--out", p(tmp.path()),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("best lambda"));
    let csv = fs::read_to_string(tmp.path().join("calibration.csv")).unwrap();
    // divisors of 8
    assert_eq!(csv.lines().count(), 2 + 4);
}
