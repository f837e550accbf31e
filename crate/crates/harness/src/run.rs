use std::path::{Path, PathBuf};

use lanefusion_core::agents::Agent;
use lanefusion_core::fusion::FeedbackSink;
use lanefusion_core::rollout::{eval_seed, evaluate_greedy, EpisodeReport, RolloutError, Trainer};
use lanefusion_core::sim::SimConfig;

use crate::advisors::build_advisor;
use crate::checkpoint::Checkpoint;
use crate::config::{ExperimentConfig, Scheme};
use crate::error::{HarnessError, Result};
use crate::feedback_log::{JsonlSink, NoFeedback};
use crate::manifest::{Failure, RunManifest, RunStatus, RunSummary};
use crate::metrics::{mean_std, tail_mean, CsvLog, EvalRow, MetricsRow};

pub const METRICS_FILE: &str = "metrics.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const FEEDBACK_FILE: &str = "feedback.jsonl";
pub const CONFIG_FILE: &str = "config.json";

const ARTIFACTS: [&str; 5] = [CONFIG_FILE, METRICS_FILE, EVAL_FILE, FEEDBACK_FILE, CHECKPOINT_FILE];

/// Where a (scheme, seed) run keeps its files.
pub fn run_dir(root: &Path, scheme: Scheme, seed: u64) -> PathBuf {
    root.join(scheme.name()).join(seed.to_string())
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub metrics: Vec<MetricsRow>,
    pub evals: Vec<EvalRow>,
    pub manifest: RunManifest,
    pub agent: Agent,
}

/// Result of training without touching the file system.
#[derive(Debug, Clone)]
pub struct Trained {
    pub agent: Agent,
    pub metrics: Vec<MetricsRow>,
}

/// Greedy, zero-noise evaluation over `episodes` scenes from the run's evaluation stream.
pub fn evaluate(agent: &Agent, sim: &SimConfig, seed: u64, episodes: u64) -> Result<Vec<EpisodeReport>> {
    (0..episodes).map(|i| evaluate_greedy(agent, sim, eval_seed(seed, i), false).map_err(Into::into)).collect()
}

/// Training loop shared by `train_run` and the sweep. `on_episode` sees every report and the
/// trainer after it; returning an error stops the run.
pub fn train_loop(
    config: &ExperimentConfig,
    seed: u64,
    sink: &mut dyn FeedbackSink,
    mut on_episode: impl FnMut(&EpisodeReport, &Trainer) -> Result<()>,
) -> Result<Trainer> {
    let advisor = build_advisor(&config.advisor, &config.sim, &config.fusion)?;
    let mut trainer = Trainer::new(
        config.sim.clone(),
        config.agent.clone(),
        config.fusion.clone(),
        config.episodes,
        seed,
        advisor,
    )
    .map_err(|e| match e {
        RolloutError::InvalidFusion { key, reason } => HarnessError::config(format!("fusion.{key}"), reason),
        other => HarnessError::config("config", other.to_string()),
    })?;
    for _ in 0..config.episodes {
        let episode = trainer.episode();
        let report = trainer
            .run_episode(sink, false)
            .map_err(|e| HarnessError::RunFailed { episode, reason: e.to_string() })?;
        on_episode(&report, &trainer)?;
    }
    Ok(trainer)
}

/// Train in memory; used where only the final policy matters.
pub fn train_in_memory(config: &ExperimentConfig, scheme: Scheme, seed: u64) -> Result<Trained> {
    let config = config.for_scheme(scheme)?;
    let mut metrics = Vec::with_capacity(config.episodes as usize);
    let mut feedback = DiscardFeedback;
    let mut none = NoFeedback;
    let sink: &mut dyn FeedbackSink = if config.advisor.is_enabled() { &mut feedback } else { &mut none };
    let trainer = train_loop(&config, seed, sink, |r, _| {
        metrics.push(MetricsRow::from(r));
        Ok(())
    })?;
    Ok(Trained { agent: trainer.agent().clone(), metrics })
}

struct DiscardFeedback;

impl FeedbackSink for DiscardFeedback {
    fn emit(&mut self, _: &lanefusion_core::fusion::FeedbackSample) -> Result<(), lanefusion_core::fusion::FeedbackError> {
        Ok(())
    }
}

/// Full training run for one scheme and seed. Writes `metrics.csv`, `eval.csv`, the feedback log
/// (advisor schemes), the final checkpoint and `manifest.json` to `root/<scheme>/<seed>/`. A
/// failing run still leaves a manifest with `status: failed`.
pub fn train_run(config: &ExperimentConfig, scheme: Scheme, seed: u64, root: &Path) -> Result<RunArtifacts> {
    let config = config.for_scheme(scheme)?;
    config.validate()?;
    let dir = run_dir(root, scheme, seed);
    std::fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    let cfg_path = dir.join(CONFIG_FILE);
    std::fs::write(&cfg_path, config.to_json_pretty() + "\n").map_err(HarnessError::io(&cfg_path))?;
    let mut manifest = RunManifest::new(scheme, seed, &config);

    let mut metrics_log = CsvLog::create(&dir.join(METRICS_FILE))?;
    let mut eval_log = CsvLog::create(&dir.join(EVAL_FILE))?;
    let mut feedback = if config.advisor.is_enabled() {
        Some(JsonlSink::create(&dir.join(FEEDBACK_FILE))?)
    } else {
        let _ = std::fs::remove_file(dir.join(FEEDBACK_FILE));
        None
    };
    let mut no_feedback = NoFeedback;
    let mut metrics = Vec::with_capacity(config.episodes as usize);
    let mut evals = Vec::new();
    let mut last_episode = 0;

    let result = {
        let sink: &mut dyn FeedbackSink = match feedback.as_mut() {
            Some(s) => s,
            None => &mut no_feedback,
        };
        train_loop(&config, seed, sink, |report, trainer| {
            last_episode = report.episode;
            let row = MetricsRow::from(report);
            metrics_log.write(&row).map_err(HarnessError::io(dir.join(METRICS_FILE)))?;
            if (report.episode + 1) % 100 == 0 {
                log::info!(
                    "{scheme} seed {seed}: episode {} mean return (last 100) {:.1}",
                    report.episode + 1,
                    tail_mean(&metrics.iter().map(|m: &MetricsRow| m.return_env).collect::<Vec<_>>(), 100)
                );
            }
            metrics.push(row);
            let done = report.episode + 1;
            if config.eval_every > 0 && done % config.eval_every == 0 {
                let reports = evaluate(trainer.agent(), &config.sim, seed, config.eval_episodes)?;
                let row = EvalRow::from_reports(done, &reports);
                eval_log.write(&row).map_err(HarnessError::io(dir.join(EVAL_FILE)))?;
                evals.push(row);
            }
            Ok(())
        })
    };
    if let Some(f) = feedback.as_mut() {
        f.flush().map_err(HarnessError::io(dir.join(FEEDBACK_FILE)))?;
    }

    let trainer = match result {
        Ok(t) => t,
        Err(err @ HarnessError::Config { .. }) => return Err(err),
        Err(err) => {
            manifest.status = RunStatus::Failed;
            manifest.failure = Some(Failure { episode: last_episode, error: err.to_string() });
            manifest.record_artifacts(&dir, &ARTIFACTS)?;
            manifest.save(&dir)?;
            return Err(err);
        }
    };

    let ckpt = Checkpoint::capture(trainer.agent(), trainer.buffer().meta(), trainer.episode(), trainer.global_step());
    ckpt.save(&dir.join(CHECKPOINT_FILE))?;
    let returns: Vec<f64> = metrics.iter().map(|m| m.return_env).collect();
    manifest.summary = Some(RunSummary {
        episodes: metrics.len() as u64,
        final_window: config.final_window,
        final_mean_return_env: tail_mean(&returns, config.final_window),
        collisions: metrics.iter().map(|m| m.collided as u64).sum(),
        total_steps: metrics.iter().map(|m| m.steps as u64).sum(),
    });
    manifest.record_artifacts(&dir, &ARTIFACTS)?;
    manifest.save(&dir)?;
    Ok(RunArtifacts { dir, metrics, evals, manifest, agent: trainer.agent().clone() })
}

/// Evaluate a saved checkpoint; returns per-episode reports and the (mean, std) of return_env.
pub fn eval_checkpoint(path: &Path, sim: &SimConfig, seed: u64, episodes: u64) -> Result<(Vec<EpisodeReport>, f64, f64)> {
    let agent = Checkpoint::load(path)?.into_agent();
    let reports = evaluate(&agent, sim, seed, episodes)?;
    let returns: Vec<f64> = reports.iter().map(|r| r.return_env).collect();
    let (mean, std) = mean_std(&returns);
    Ok((reports, mean, std))
}
