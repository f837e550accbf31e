use std::fs::File;
use std::io::Write;
use std::path::Path;

use lanefusion_core::rollout::EpisodeReport;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const METRICS_HEADER: [&str; 10] = [
    "episode",
    "return_env",
    "return_shaped",
    "steps",
    "collided",
    "lane_changes",
    "aborted_changes",
    "consistency_rate",
    "epsilon_or_noise",
    "loss_mean",
];

/// One line of `metrics.csv`. `consistency_rate` is blank when no advisor ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: u64,
    pub return_env: f64,
    pub return_shaped: f64,
    pub steps: u32,
    pub collided: u8,
    pub lane_changes: u32,
    pub aborted_changes: u32,
    pub consistency_rate: Option<f64>,
    pub epsilon_or_noise: f64,
    pub loss_mean: f64,
}

impl From<&EpisodeReport> for MetricsRow {
    fn from(r: &EpisodeReport) -> Self {
        Self {
            episode: r.episode,
            return_env: r.return_env,
            return_shaped: r.return_shaped,
            steps: r.steps,
            collided: r.collided as u8,
            lane_changes: r.lane_changes,
            aborted_changes: r.aborted_changes,
            consistency_rate: r.consistency.and_then(|c| c.rate()),
            epsilon_or_noise: r.exploration,
            loss_mean: r.loss_mean,
        }
    }
}

/// Greedy evaluation block run every `eval_every` training episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Number of training episodes completed before this evaluation.
    pub after_episode: u64,
    pub episodes: u64,
    pub mean_return_env: f64,
    pub std_return_env: f64,
    pub collision_rate: f64,
    pub mean_steps: f64,
}

impl EvalRow {
    pub fn from_reports(after_episode: u64, reports: &[EpisodeReport]) -> Self {
        let returns: Vec<f64> = reports.iter().map(|r| r.return_env).collect();
        let (mean, std) = mean_std(&returns);
        let n = reports.len().max(1) as f64;
        Self {
            after_episode,
            episodes: reports.len() as u64,
            mean_return_env: mean,
            std_return_env: std,
            collision_rate: reports.iter().filter(|r| r.collided).count() as f64 / n,
            mean_steps: reports.iter().map(|r| r.steps as f64).sum::<f64>() / n,
        }
    }
}

/// Streams serializable rows into a CSV file, flushing after each row.
pub struct CsvLog<W: Write> {
    writer: csv::Writer<W>,
}

impl CsvLog<File> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(HarnessError::io(path))?;
        Ok(Self { writer: csv::Writer::from_writer(file) })
    }
}

impl<W: Write> CsvLog<W> {
    pub fn from_writer(w: W) -> Self {
        Self { writer: csv::Writer::from_writer(w) }
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> std::io::Result<()> {
        self.writer.serialize(row).map_err(std::io::Error::other)?;
        self.writer.flush()
    }

    pub fn into_inner(self) -> W {
        self.writer.into_inner().unwrap_or_else(|e| panic!("csv flush failed: {}", e.error()))
    }
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    reader.deserialize().map(|row| row.map_err(|e| HarnessError::format(path, e))).collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let header = reader.headers().map_err(|e| HarnessError::format(path, e))?;
    if header.iter().ne(METRICS_HEADER) {
        return Err(HarnessError::format(path, format!("unexpected metrics header {:?}", header)));
    }
    read_csv(path)
}

/// Trailing moving average: point `i` averages the last `window` values up to and including `i`.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Mean and population standard deviation; `(NaN, NaN)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean of the last `window` values (all of them if there are fewer).
pub fn tail_mean(values: &[f64], window: usize) -> f64 {
    let start = values.len().saturating_sub(window);
    mean_std(&values[start..]).0
}
