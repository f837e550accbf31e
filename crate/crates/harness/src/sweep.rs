use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Scheme};
use crate::error::{HarnessError, Result};
use crate::metrics::{mean_std, CsvLog};
use crate::plot::{render_plot, PlotSpec, Series};
use crate::run::{evaluate, train_in_memory, Trained};

pub const DEFAULT_COUNTS: [usize; 7] = [5, 15, 25, 35, 45, 55, 65];
pub const SWEEP_EVAL_EPISODES: u64 = 100;

/// Whether each vehicle count gets its own training run or one policy, trained at the config's
/// count, is evaluated everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    #[default]
    Retrain,
    Transfer,
}

impl FromStr for SweepMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "retrain" => Ok(SweepMode::Retrain),
            "transfer" => Ok(SweepMode::Transfer),
            other => Err(format!("unknown sweep mode `{other}` (expected retrain or transfer)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub count: usize,
    pub mean_return_env: f64,
    pub std_return_env: f64,
    pub collision_rate: f64,
    pub seeds: usize,
    pub episodes_evaluated: u64,
    /// Empty on success, otherwise the first error of the cell.
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub counts: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub mode: SweepMode,
    pub eval_episodes: u64,
}

impl SweepOptions {
    pub fn new(schemes: Vec<Scheme>, seeds: Vec<u64>) -> Self {
        Self { counts: DEFAULT_COUNTS.to_vec(), schemes, seeds, mode: SweepMode::Retrain, eval_episodes: SWEEP_EVAL_EPISODES }
    }
}

type CellKey = (Scheme, usize, u64);

/// Per-(scheme, count, seed) evaluation returns, or the error that stopped the cell.
fn run_cells(config: &ExperimentConfig, opts: &SweepOptions) -> BTreeMap<CellKey, Result<(Vec<f64>, u64)>> {
    let train_cells: Vec<(Scheme, Option<usize>, u64)> = match opts.mode {
        SweepMode::Retrain => opts
            .schemes
            .iter()
            .flat_map(|&s| opts.counts.iter().flat_map(move |&c| opts.seeds.iter().map(move |&seed| (s, Some(c), seed))))
            .collect(),
        SweepMode::Transfer => {
            opts.schemes.iter().flat_map(|&s| opts.seeds.iter().map(move |&seed| (s, None, seed))).collect()
        }
    };
    let trained: Vec<((Scheme, Option<usize>, u64), Result<Trained>)> = train_cells
        .into_par_iter()
        .map(|(scheme, count, seed)| {
            let mut cfg = config.clone();
            if let Some(c) = count {
                cfg.sim.human_count = c;
            }
            let out = train_in_memory(&cfg, scheme, seed);
            if let Err(e) = &out {
                log::warn!("sweep: training {scheme} count {count:?} seed {seed} failed: {e}");
            }
            ((scheme, count, seed), out)
        })
        .collect();

    let mut jobs = Vec::new();
    for ((scheme, count, seed), result) in &trained {
        let counts: Vec<usize> = match count {
            Some(c) => vec![*c],
            None => opts.counts.clone(),
        };
        for c in counts {
            jobs.push(((*scheme, c, *seed), result.as_ref()));
        }
    }
    jobs.into_par_iter()
        .map(|(key, trained)| {
            let (_, count, seed) = key;
            let out = match trained {
                Err(e) => Err(HarnessError::Invalid(e.to_string())),
                Ok(t) => {
                    let mut sim = config.sim.clone();
                    sim.human_count = count;
                    evaluate(&t.agent, &sim, seed, opts.eval_episodes).map(|reports| {
                        let collisions = reports.iter().filter(|r| r.collided).count() as u64;
                        (reports.iter().map(|r| r.return_env).collect(), collisions)
                    })
                }
            };
            (key, out)
        })
        .collect()
}

/// Train (or reuse) per cell, evaluate greedily, aggregate over seeds. Failed cells are kept
/// with their error so the table always has `counts × schemes` rows.
pub fn sweep_hv_counts(config: &ExperimentConfig, opts: &SweepOptions) -> Vec<SweepRow> {
    let cells = run_cells(config, opts);
    let mut rows = Vec::new();
    for &scheme in &opts.schemes {
        for &count in &opts.counts {
            let mut returns = Vec::new();
            let mut collisions = 0;
            let mut seeds = 0;
            let mut error = String::new();
            for &seed in &opts.seeds {
                match &cells[&(scheme, count, seed)] {
                    Ok((r, c)) => {
                        returns.extend_from_slice(r);
                        collisions += c;
                        seeds += 1;
                    }
                    Err(e) if error.is_empty() => error = format!("seed {seed}: {e}"),
                    Err(_) => {}
                }
            }
            let (mean, std) = mean_std(&returns);
            rows.push(SweepRow {
                scheme,
                count,
                mean_return_env: mean,
                std_return_env: std,
                collision_rate: if returns.is_empty() { f64::NAN } else { collisions as f64 / returns.len() as f64 },
                seeds,
                episodes_evaluated: returns.len() as u64,
                error,
            });
        }
    }
    rows
}

/// Writes `sweep.csv` plus one `sweep_<scheme>.svg` per scheme into `dir`.
pub fn write_sweep(rows: &[SweepRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let csv_path = dir.join("sweep.csv");
    let mut log = CsvLog::create(&csv_path)?;
    for row in rows {
        log.write(row).map_err(HarnessError::io(&csv_path))?;
    }
    let mut written = vec![csv_path];
    let mut schemes: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
    schemes.dedup();
    for scheme in schemes {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.scheme == scheme && r.mean_return_env.is_finite())
            .map(|r| (r.count as f64, r.mean_return_env))
            .collect();
        if points.is_empty() {
            continue;
        }
        let path = dir.join(format!("sweep_{}.svg", scheme.name()));
        let spec = PlotSpec {
            title: format!("{scheme}: evaluation return vs. human vehicles"),
            x_label: "human-driven vehicles".into(),
            y_label: "mean return (env)".into(),
            smoothing_window: 1,
            markers: true,
        };
        render_plot(&[Series { label: scheme.name().into(), points }], &spec, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig { episodes: 2, ..ExperimentConfig::default() };
        cfg.sim.max_steps = 20;
        cfg.agent.hidden_width = 8;
        cfg.agent.warmup_transitions = 8;
        cfg.agent.batch_size = 4;
        cfg
    }

    #[test]
    fn table_shape_and_empty_road() {
        let mut opts = SweepOptions::new(vec![Scheme::D3qnAdvisor, Scheme::D3qnNoAdvisor], vec![1]);
        opts.counts = vec![0, 3];
        opts.eval_episodes = 3;
        let rows = sweep_hv_counts(&tiny(), &opts);
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert!(r.error.is_empty(), "{}", r.error);
            assert_eq!(r.episodes_evaluated, 3);
        }
        let empty: Vec<_> = rows.iter().filter(|r| r.count == 0).collect();
        assert!(empty.iter().all(|r| r.collision_rate == 0.0 && r.mean_return_env >= 0.0));
    }

    #[test]
    fn failing_cells_are_reported_and_the_sweep_continues() {
        let mut opts = SweepOptions::new(vec![Scheme::D3qnNoAdvisor], vec![0]);
        // Far too many vehicles to place on a 100 m road.
        let mut cfg = tiny();
        cfg.sim.road_length = 100.0;
        opts.counts = vec![1, 500];
        opts.eval_episodes = 1;
        let rows = sweep_hv_counts(&cfg, &opts);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_empty());
        assert!(rows[1].error.contains("density"), "{}", rows[1].error);
        assert!(rows[1].mean_return_env.is_nan());
    }

    #[test]
    fn transfer_trains_once_per_seed() {
        let mut opts = SweepOptions::new(vec![Scheme::D3qnNoAdvisor], vec![2]);
        opts.counts = vec![0, 4];
        opts.mode = SweepMode::Transfer;
        opts.eval_episodes = 2;
        let rows = sweep_hv_counts(&tiny(), &opts);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_empty()));
    }

    #[test]
    fn writes_csv_and_plots() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            SweepRow { scheme: Scheme::D3qnAdvisor, count: 5, mean_return_env: 10.0, std_return_env: 1.0, collision_rate: 0.0, seeds: 1, episodes_evaluated: 3, error: String::new() },
            SweepRow { scheme: Scheme::D3qnAdvisor, count: 35, mean_return_env: 12.0, std_return_env: 1.0, collision_rate: 0.1, seeds: 1, episodes_evaluated: 3, error: String::new() },
        ];
        let files = write_sweep(&rows, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("scheme,count,mean_return_env,std_return_env"));
        assert!(text.contains("d3qn+advisor,35,12.0"));
    }
}
