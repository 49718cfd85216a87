use std::path::Path;
use std::process::{Command, Output};

fn affectloop(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_affectloop"));
    cmd.args(args).env("RUST_LOG", "warn");
    for var in ["AFFECTLOOP_CONFIG", "AFFECTLOOP_SEED", "AFFECTLOOP_PORT_HTTP", "AFFECTLOOP_PORT_INGEST", "AFFECTLOOP_UDP_SINK", "AFFECTLOOP_OUT"] {
        cmd.env_remove(var);
    }
    cmd.envs(envs.iter().copied());
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().expect("stderr has a line");
    serde_json::from_str(last).expect("error is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_train_validate_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = affectloop(&["--seed", "5", "--out", p(&out), "synth", "--stimuli", "15", "--duration", "10"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for file in ["session.csv", "labels.json"] {
        assert!(out.join(file).exists(), "{file}");
    }

    let data = out.join("session.csv");
    let labels = out.join("labels.json");
    let trained = stdout_json(&affectloop(&["--out", p(&out), "train", "--data", p(&data), "--labels", p(&labels)], &[]));
    for file in ["model.json", "report.json", "cv_report.json", "features.csv"] {
        assert!(out.join(file).exists(), "{file}");
    }
    assert!(trained["arousal"]["mean_accuracy"].as_f64().unwrap() > 0.5);

    let check = dir.path().join("check");
    let features = out.join("features.csv");
    let o = affectloop(&["--out", p(&check), "validate", "--features", p(&features)], &[]);
    assert!(o.status.success());
    let stored = std::fs::read(out.join("cv_report.json")).unwrap();
    let reproduced = std::fs::read(check.join("cv_report.json")).unwrap();
    assert_eq!(stored, reproduced);
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = affectloop(&["--seed", seed, "--out", p(&out), "synth", "--stimuli", "3", "--duration", "4"], &[]);
        assert!(o.status.success());
        std::fs::read(out.join("session.csv")).unwrap()
    };
    assert_eq!(run("a", "9"), run("b", "9"));
    assert_ne!(run("a", "9"), run("c", "10"));
}

#[test]
fn validate_empty_dataset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("features.csv");
    std::fs::write(&empty, "").unwrap();
    let o = affectloop(&["validate", "--features", p(&empty)], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_json(&o)["error"].as_str().unwrap().contains("empty dataset"));
}

#[test]
fn missing_file_and_unknown_subcommand_report_json() {
    let o = affectloop(&["train", "--data", "/nonexistent.csv", "--labels", "/nonexistent.json"], &[]);
    assert!(!o.status.success());
    assert!(stderr_json(&o)["error"].as_str().unwrap().contains("/nonexistent.csv"));

    let o = affectloop(&["frobnicate"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "usage");
}

#[test]
fn designspace_commands() {
    assert_eq!(stdout_json(&affectloop(&["designspace", "count"], &[])), 35_726_880);
    let shown = stdout_json(&affectloop(&["designspace", "show", "0"], &[]));
    assert_eq!(shown["index"], 0);
    let sample = |seed| stdout_json(&affectloop(&["--seed", seed, "designspace", "sample", "--n", "4"], &[]));
    assert_eq!(sample("3"), sample("3"));
    assert_eq!(sample("3").as_array().unwrap().len(), 4);
    let o = affectloop(&["designspace", "show", "35726880"], &[]);
    assert!(!o.status.success());
}

#[test]
fn config_precedence_file_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"seed": 1, "network": {"http_port": 9001, "ingest_port": 9002}, "cv": {"k_features": 12}}"#).unwrap();
    let dump = |args: &[&str], envs: &[(&str, &str)]| {
        let mut all = vec!["--config", p(&file)];
        all.extend_from_slice(args);
        all.extend(["config", "dump"]);
        stdout_json(&affectloop(&all, envs))
    };
    let c = dump(&[], &[]);
    assert_eq!((c["seed"].as_u64(), c["network"]["http_port"].as_u64()), (Some(1), Some(9001)));
    assert_eq!(c["cv"]["k_features"], 12);
    assert_eq!(c["cv"]["folds"], 5);

    let c = dump(&[], &[("AFFECTLOOP_SEED", "2"), ("AFFECTLOOP_PORT_HTTP", "9100")]);
    assert_eq!((c["seed"].as_u64(), c["network"]["http_port"].as_u64()), (Some(2), Some(9100)));

    let c = dump(&["--seed", "3"], &[("AFFECTLOOP_SEED", "2")]);
    assert_eq!(c["seed"], 3);

    let o = affectloop(&["--port-http", "9002", "--config", p(&file), "config", "dump"], &[]);
    assert!(!o.status.success());
    assert!(stderr_json(&o)["error"].as_str().unwrap().contains("9002"));
}

#[test]
fn replay_to_stdout_is_ndjson() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert!(affectloop(&["--out", p(out), "synth", "--stimuli", "1", "--duration", "1"], &[]).status.success());
    let data = out.join("session.csv");
    let o = affectloop(&["replay", "--data", p(&data), "--rate", "inf"], &[]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 250);
    assert_eq!(lines[0]["ch"].as_array().unwrap().len(), 32);
    assert_eq!(lines[1]["t"], 0.004);
}

#[test]
fn metrics_from_session_log() {
    use affectloop::features::{AffectClass, SamRating};
    use affectloop::session::state::PredictedPair;
    use affectloop::session::{SessionLog, TrialKind, TrialRecord, TrialResponse};
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.ndjson");
    let mut log = SessionLog::open(&path).unwrap();
    let record = |kind, index, response| TrialRecord {
        kind,
        index,
        event_time: index as f64,
        capture: None,
        predicted: Some(PredictedPair { arousal: AffectClass::High, valence: AffectClass::Low }),
        response: Some(response),
        response_time: Some(index as f64 + 1.0),
        design_before: None,
        design_after: None,
    };
    log.append(&record(TrialKind::AgreeProbe, 1, TrialResponse::Agree(true))).unwrap();
    log.append(&record(TrialKind::SamProbe, 2, TrialResponse::Sam(SamRating::new(5, 1).unwrap()))).unwrap();
    log.append(&record(TrialKind::AgreeProbe, 3, TrialResponse::Agree(false))).unwrap();
    drop(log);
    let m = stdout_json(&affectloop(&["metrics", p(&path)], &[]));
    assert_eq!(m["agreement_rate"], 0.5);
    assert_eq!(m["arousal_consistency"], 1.0);
    assert_eq!(m["valence_consistency"], 1.0);
}
