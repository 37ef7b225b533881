use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use disaudit::acoustics::write_wav;
use disaudit::synth::{generate_signal, SignalKind};
use serde_json::Value;

const FAST: &[&str] = &[
    "--iterations",
    "250",
    "--perplexity",
    "8",
    "--n-perm",
    "10",
    "--bootstrap-b",
    "3",
    "--kde-resolution",
    "20",
    "--no-pooled",
];

fn disaudit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disaudit"))
        .args(args)
        .current_dir(cwd)
        .env("DISAUDIT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path) {
    let out = disaudit(
        &["synth", "--out", "corpus", "--seed", "3", "--corpora", "1", "--points-per-cluster", "20"],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_writes_corpora_schemas_and_config() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let root = dir.path().join("corpus");
    for (dim, prefix) in [("emotional", "SE"), ("linguistic", "SL"), ("pathological", "SP")] {
        let csv = fs::read_to_string(root.join("data").join(dim).join(format!("{prefix}1.csv"))).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("source_id,x0,"));
        assert_eq!(lines.count(), 60);
        assert!(root.join("schemas").join(format!("{dim}.schema")).is_file());
    }
    let cfg = fs::read_to_string(root.join("config.toml")).unwrap();
    assert!(cfg.contains("corpus_root = \"data\""));
}

#[test]
fn audit_writes_a_complete_report() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let mut args = vec!["audit", "--config", "corpus/config.toml", "--out", "audit"];
    args.extend_from_slice(FAST);
    let out = disaudit(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("audit/report.json")).unwrap()).unwrap();
    assert_eq!(report["combination"], "SE1-SL1-SP1");
    for dim in ["emotional", "linguistic", "pathological"] {
        assert!(report["dimensions"][dim]["silhouette"].is_number());
        assert!(dir.path().join(format!("audit/embedding_{dim}.csv")).is_file());
        assert!(dir.path().join(format!("audit/kde_{dim}.csv")).is_file());
    }
    assert!(report["confound"]["verdict"]["exceeds_null"].is_boolean());
    assert!(dir.path().join("audit/confound.csv").is_file());
}

#[test]
fn missing_input_exits_one_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    fs::remove_file(dir.path().join("corpus/data/linguistic/SL1.csv")).unwrap();
    fs::create_dir(dir.path().join("corpus/data/linguistic/SL1")).unwrap();
    let mut args = vec!["suite", "--config", "corpus/config.toml", "--out", "suite"];
    args.extend_from_slice(FAST);
    let out = disaudit(&args, dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("suite/SE1-SL1-SP1/report.json")).unwrap()).unwrap();
    assert!(report["dimensions"]["emotional"]["silhouette"].is_number());
    assert!(report["dimensions"]["linguistic"].is_null());
    assert!(!report["meta"]["failures"].as_array().unwrap().is_empty());
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("suite/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failed_combinations"][0], "SE1-SL1-SP1");
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "seed = 1\nunknown_key = 3\n").unwrap();
    let out = disaudit(&["suite", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));

    fs::write(dir.path().join("range.toml"), "[tsne]\nperplexity = -1.0\n").unwrap();
    let out = disaudit(&["suite", "--config", "range.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    synth(dir.path());
    let out = disaudit(&["audit", "--config", "corpus/config.toml", "--combination", "NOPE"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_disaudit"))
        .args(["synth", "--out", "x"])
        .current_dir(dir.path())
        .env("DISAUDIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extract_reads_a_wav_directory() {
    let dir = tempfile::tempdir().unwrap();
    let wavs = dir.path().join("wavs");
    fs::create_dir(&wavs).unwrap();
    for (i, freq) in [180.0, 220.0, 260.0].iter().enumerate() {
        let kind = SignalKind::Sine {
            freq: *freq,
            amp: 0.5,
            duration: 0.5,
            rate: 16_000,
        };
        let signal = generate_signal(&kind, i as u64).unwrap();
        write_wav(&signal.clip, &wavs.join(format!("clip{i}.wav"))).unwrap();
    }
    let out = disaudit(
        &["extract", "--input", "wavs", "--dimension", "pathological", "--out", "feat/path.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("feat/path.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0].split(',').count(), 17);
    assert!(lines[1].starts_with("clip0"));

    let out = disaudit(&["extract", "--input", "nowhere", "--dimension", "emotional", "--out", "e.csv"], dir.path());
    assert_ne!(out.status.code(), Some(0));
}
