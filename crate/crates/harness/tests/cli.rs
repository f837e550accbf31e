use std::path::Path;
use std::process::{Command, Output};

use lanefusion::advisors::ReplayAdvisor;
use lanefusion::scenes::ExportedScene;

fn lanefusion(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lanefusion"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LANEFUSION_OUT")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.json");
    std::fs::write(
        &path,
        r#"{"episodes": 3, "eval_every": 0, "final_window": 2,
            "sim": {"max_steps": 30, "human_count": 8},
            "agent": {"hidden_width": 16, "warmup_transitions": 16, "batch_size": 8}}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn train_eval_compare_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("runs");
    let out_s = out.to_str().unwrap();
    let o = lanefusion(
        &["train", "--config", &cfg, "--scheme", "d3qn+advisor,d3qn-no-advisor", "--seed", "0,1", "--out", out_s],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for run in ["d3qn+advisor/0", "d3qn+advisor/1", "d3qn-no-advisor/0", "d3qn-no-advisor/1"] {
        assert!(out.join(run).join("manifest.json").exists(), "{run}");
    }

    let o = lanefusion(&["eval", "--config", &cfg, "--out", out_s, "--seed", "1", "--eval-episodes", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 greedy episodes"));

    let o = lanefusion(&["compare", out_s, "--out", out_s, "--final-window", "2", "--smoothing-window", "2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("compare/report.md").exists());

    let svg = dir.path().join("curves.svg");
    let metrics = out.join("d3qn+advisor/0/metrics.csv");
    let o = lanefusion(&["plot", metrics.to_str().unwrap(), "--out", svg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn out_falls_back_to_the_environment_then_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let env_out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_lanefusion"))
        .args(["train", "--config", &cfg, "--advisor", "none"])
        .current_dir(dir.path())
        .env("LANEFUSION_OUT", &env_out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_out.join("d3qn-no-advisor/0/metrics.csv").exists());

    let o = lanefusion(&["train", "--config", &cfg, "--advisor", "none", "--episodes", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("runs/d3qn-no-advisor/0/metrics.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"agent": {"gamma": 1.5}}"#).unwrap();
    let o = lanefusion(&["train", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("agent.gamma"), "{}", stderr(&o));

    std::fs::write(&bad, r#"{"agent": {"gama": 0.9}}"#).unwrap();
    let o = lanefusion(&["train", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(lanefusion(&["train", "--scheme", "ppo"], dir.path()).status.code(), Some(1));
    assert_eq!(lanefusion(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(lanefusion(&["train", "--advisor", "bridge"], dir.path()).status.code(), Some(1));
    assert_eq!(lanefusion(&["train", "--advisor", "replay"], dir.path()).status.code(), Some(1));
    assert_eq!(lanefusion(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn run_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("diverge.json");
    std::fs::write(
        &cfg,
        r#"{"episodes": 20, "sim": {"max_steps": 30}, "agent": {"lr": 1e30, "hidden_width": 16, "warmup_transitions": 16, "batch_size": 8}}"#,
    )
    .unwrap();
    let o = lanefusion(&["train", "--config", cfg.to_str().unwrap(), "--out", "r"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let manifest = std::fs::read_to_string(dir.path().join("r/d3qn+advisor/0/manifest.json")).unwrap();
    assert!(manifest.contains("\"failed\""));

    let o = lanefusion(&["eval", "--checkpoint", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_scenes_is_deterministic_and_drives_the_replay_advisor() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = lanefusion(&["export-scenes", "--count", "50", "--seed", "3", "--out", p.to_str().unwrap()], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let o = lanefusion(&["export-scenes", "--count", "50", "--seed", "3"], dir.path());
    assert_eq!(o.stdout, bytes);

    let scenes: Vec<ExportedScene> =
        String::from_utf8(bytes).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(scenes.len(), 50);
    assert!(scenes.iter().enumerate().all(|(i, s)| s.index == i as u64));

    // Replay files hold one recommendation (or null) per line.
    let replay = dir.path().join("replay.jsonl");
    let lines: Vec<String> = scenes
        .iter()
        .map(|s| serde_json::json!({"action": s.recommended, "confidence": s.confidence, "rationale": s.rationale}).to_string())
        .collect();
    std::fs::write(&replay, lines.join("\n") + "\nnull\n").unwrap();
    assert_eq!(ReplayAdvisor::load(&replay).unwrap().remaining(), 51);

    let cfg = tiny_config(dir.path());
    let o = lanefusion(
        &["train", "--config", &cfg, "--advisor", "replay", "--replay-file", replay.to_str().unwrap(), "--out", "r"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
}
