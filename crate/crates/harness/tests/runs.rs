use std::fs;

use lanefusion::checkpoint::Checkpoint;
use lanefusion::compare::{compare_runs, load_runs};
use lanefusion::feedback_log::read_feedback_log;
use lanefusion::manifest::{blob_sha256, RunManifest, RunStatus};
use lanefusion::metrics::read_metrics;
use lanefusion::run::{eval_checkpoint, train_run, CHECKPOINT_FILE, FEEDBACK_FILE, METRICS_FILE};
use lanefusion::{ExperimentConfig, HarnessError, Scheme};

fn small(episodes: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { episodes, eval_every: 2, eval_episodes: 2, final_window: 3, ..ExperimentConfig::default() };
    cfg.sim.max_steps = 40;
    cfg.sim.human_count = 10;
    cfg.agent.hidden_width = 16;
    cfg.agent.warmup_transitions = 16;
    cfg.agent.batch_size = 8;
    cfg
}

#[test]
fn empty_road_never_loses_reward() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(5);
    cfg.sim.human_count = 0;
    let run = train_run(&cfg, Scheme::D3qnAdvisor, 0, dir.path()).unwrap();
    assert_eq!(run.metrics.len(), 5);
    for m in &run.metrics {
        assert!(m.return_env >= 0.0, "episode {} returned {}", m.episode, m.return_env);
        assert_eq!(m.collided, 0);
    }
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small(4);
    let ra = train_run(&cfg, Scheme::D3qnAdvisor, 7, a.path()).unwrap();
    let rb = train_run(&cfg, Scheme::D3qnAdvisor, 7, b.path()).unwrap();
    for name in [METRICS_FILE, CHECKPOINT_FILE, FEEDBACK_FILE] {
        let x = fs::read(ra.dir.join(name)).unwrap();
        let y = fs::read(rb.dir.join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
    assert_eq!(ra.manifest.artifacts, rb.manifest.artifacts);
    let other = train_run(&cfg, Scheme::D3qnAdvisor, 8, a.path()).unwrap();
    assert_ne!(fs::read(other.dir.join(METRICS_FILE)).unwrap(), fs::read(ra.dir.join(METRICS_FILE)).unwrap());
}

#[test]
fn manifest_hashes_the_files_it_lists() {
    let dir = tempfile::tempdir().unwrap();
    let run = train_run(&small(3), Scheme::DqnAdvisor, 1, dir.path()).unwrap();
    let m = RunManifest::load(&run.dir).unwrap();
    assert_eq!(m.status, RunStatus::Completed);
    assert_eq!(m.summary.as_ref().unwrap().episodes, 3);
    assert!(m.artifacts.contains_key(METRICS_FILE));
    for (name, hash) in &m.artifacts {
        assert_eq!(&blob_sha256(&fs::read(run.dir.join(name)).unwrap()), hash, "{name}");
    }
}

#[test]
fn no_advisor_runs_leave_the_rate_blank_and_write_no_feedback() {
    let dir = tempfile::tempdir().unwrap();
    let run = train_run(&small(3), Scheme::D3qnNoAdvisor, 0, dir.path()).unwrap();
    let text = fs::read_to_string(run.dir.join(METRICS_FILE)).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert_eq!(cols[7], "", "{line}");
    }
    assert!(!run.dir.join(FEEDBACK_FILE).exists());
    assert!(read_metrics(&run.dir.join(METRICS_FILE)).unwrap().iter().all(|r| r.consistency_rate.is_none()));
}

#[test]
fn feedback_log_has_one_line_per_disagreement() {
    let dir = tempfile::tempdir().unwrap();
    let run = train_run(&small(4), Scheme::DqnAdvisor, 3, dir.path()).unwrap();
    let samples = read_feedback_log(&run.dir.join(FEEDBACK_FILE)).unwrap();
    let rows = read_metrics(&run.dir.join(METRICS_FILE)).unwrap();
    // Early epsilon-greedy play disagrees with the rules almost every step.
    assert!(!samples.is_empty());
    for (ep, row) in rows.iter().enumerate() {
        let n = samples.iter().filter(|s| s.episode == ep as u64).count();
        let rate = row.consistency_rate.unwrap();
        assert!(n as f64 <= row.steps as f64 * (1.0 - rate) + 1e-9, "episode {ep}: {n} samples");
        assert!(samples.iter().filter(|s| s.episode == ep as u64).all(|s| s.executed != s.recommended));
    }
}

#[test]
fn checkpoint_reloads_to_the_same_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(3);
    let run = train_run(&cfg, Scheme::D3qnAdvisor, 2, dir.path()).unwrap();
    let path = run.dir.join(CHECKPOINT_FILE);
    let agent = Checkpoint::load(&path).unwrap().into_agent();
    assert_eq!(agent, run.agent);
    let (a, mean_a, _) = eval_checkpoint(&path, &cfg.sim, 5, 3).unwrap();
    let (b, mean_b, _) = eval_checkpoint(&path, &cfg.sim, 5, 3).unwrap();
    assert_eq!(a.len(), 3);
    assert_eq!(mean_a, mean_b);
    assert_eq!(a.iter().map(|r| r.steps).collect::<Vec<_>>(), b.iter().map(|r| r.steps).collect::<Vec<_>>());
}

#[test]
fn divergence_leaves_a_failure_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(30);
    cfg.agent.lr = 1e30;
    let err = train_run(&cfg, Scheme::D3qnNoAdvisor, 0, dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::RunFailed { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
    let m = RunManifest::load(&dir.path().join("d3qn-no-advisor/0")).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    let failure = m.failure.unwrap();
    assert!(failure.error.contains("non-finite"), "{}", failure.error);
    assert!(m.summary.is_none());
}

#[test]
fn invalid_config_is_rejected_before_any_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(3);
    cfg.agent.gamma = 1.5;
    let err = train_run(&cfg, Scheme::D3qnAdvisor, 0, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("agent.gamma"), "{err}");
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn compare_reads_finished_runs_and_skips_failed_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(4);
    for seed in [0, 1] {
        train_run(&cfg, Scheme::D3qnAdvisor, seed, dir.path()).unwrap();
        train_run(&cfg, Scheme::D3qnNoAdvisor, seed, dir.path()).unwrap();
    }
    let mut broken = cfg.clone();
    broken.agent.lr = 1e30;
    broken.episodes = 30;
    assert!(train_run(&broken, Scheme::DqnAdvisor, 0, dir.path()).is_err());

    let runs = load_runs(&[dir.path().to_path_buf()]).unwrap();
    assert_eq!(runs.len(), 4);
    let report = compare_runs(&runs, 3, 2).unwrap();
    assert_eq!(report.schemes.len(), 2);
    assert!(report.gain(Scheme::D3qnAdvisor, Scheme::D3qnNoAdvisor).is_some());
    let out = dir.path().join("cmp");
    report.write(&out, 2).unwrap();
    for f in ["report.md", "report.csv", "schemes.csv", "convergence.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
