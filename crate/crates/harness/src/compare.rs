use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lanefusion_core::agents::AgentKind;
use lanefusion_core::fusion::AdvisorKind;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Scheme};
use crate::error::{HarnessError, Result};
use crate::manifest::{RunManifest, RunStatus, MANIFEST_FILE};
use crate::metrics::{mean_std, read_metrics, tail_mean, CsvLog};
use crate::plot::{render_plot, PlotSpec, Series};
use crate::run::METRICS_FILE;

/// One completed run as seen by the comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub returns: Vec<f64>,
    pub source: PathBuf,
}

fn find_manifests(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.join(MANIFEST_FILE).is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(HarnessError::io(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        find_manifests(&e, out)?;
    }
    Ok(())
}

/// Load every completed run below the given paths (run directories or roots holding them).
/// Failed runs are skipped with a warning.
pub fn load_runs(paths: &[PathBuf]) -> Result<Vec<RunRecord>> {
    let mut dirs = Vec::new();
    for p in paths {
        find_manifests(p, &mut dirs)?;
    }
    let mut runs = Vec::new();
    for dir in dirs {
        let manifest = RunManifest::load(&dir)?;
        if manifest.status != RunStatus::Completed {
            log::warn!("skipping failed run {}", dir.display());
            continue;
        }
        let metrics = read_metrics(&dir.join(METRICS_FILE))?;
        runs.push(RunRecord {
            scheme: manifest.scheme,
            seed: manifest.seed,
            config: manifest.config,
            returns: metrics.iter().map(|m| m.return_env).collect(),
            source: dir,
        });
    }
    Ok(runs)
}

/// The config with every scheme-dependent field reset, so runs of different schemes compare equal.
fn comparable(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.agent.kind = AgentKind::D3qn;
    c.advisor = AdvisorKind::None;
    c.seeds.clear();
    c.output_dir = None;
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeStats {
    pub scheme: Scheme,
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// Mean over runs of each run's final-window mean return_env.
    pub final_mean: f64,
    /// Spread of the per-run final means.
    pub final_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseGain {
    pub scheme: Scheme,
    pub baseline: Scheme,
    pub scheme_mean: f64,
    pub baseline_mean: f64,
    /// `(scheme - baseline) / |baseline| * 100`.
    pub gain_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub final_window: usize,
    pub schemes: Vec<SchemeStats>,
    pub gains: Vec<PairwiseGain>,
    /// Per-scheme mean return curve across runs, unsmoothed.
    pub curves: Vec<Series>,
}

pub fn gain_percent(value: f64, baseline: f64) -> f64 {
    (value - baseline) / baseline.abs() * 100.0
}

/// Needs at least `min_runs` runs per scheme and identical configs apart from the scheme.
pub fn compare_runs(runs: &[RunRecord], final_window: usize, min_runs: usize) -> Result<ComparisonReport> {
    let Some(first) = runs.first() else {
        return Err(HarnessError::Invalid("no completed runs to compare".into()));
    };
    let reference = comparable(&first.config);
    for r in runs {
        if comparable(&r.config) != reference {
            return Err(HarnessError::Invalid(format!(
                "run {} ({} seed {}) was trained with a different config than {}",
                r.source.display(),
                r.scheme,
                r.seed,
                first.source.display()
            )));
        }
    }
    let mut by_scheme: BTreeMap<Scheme, Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        by_scheme.entry(r.scheme).or_default().push(r);
    }
    let mut schemes = Vec::new();
    let mut curves = Vec::new();
    for (&scheme, rs) in &by_scheme {
        if rs.len() < min_runs {
            return Err(HarnessError::Invalid(format!(
                "scheme {scheme} has {} completed run(s), need at least {min_runs}",
                rs.len()
            )));
        }
        let finals: Vec<f64> = rs.iter().map(|r| tail_mean(&r.returns, final_window)).collect();
        let (final_mean, final_std) = mean_std(&finals);
        schemes.push(SchemeStats { scheme, runs: rs.len(), seeds: rs.iter().map(|r| r.seed).collect(), final_mean, final_std });
        let len = rs.iter().map(|r| r.returns.len()).min().unwrap_or(0);
        let curve: Vec<f64> = (0..len).map(|i| rs.iter().map(|r| r.returns[i]).sum::<f64>() / rs.len() as f64).collect();
        curves.push(Series::indexed(scheme.name(), &curve));
    }
    let mut gains = Vec::new();
    for a in &schemes {
        for b in &schemes {
            if a.scheme != b.scheme {
                gains.push(PairwiseGain {
                    scheme: a.scheme,
                    baseline: b.scheme,
                    scheme_mean: a.final_mean,
                    baseline_mean: b.final_mean,
                    gain_percent: gain_percent(a.final_mean, b.final_mean),
                });
            }
        }
    }
    Ok(ComparisonReport { final_window, schemes, gains, curves })
}

impl ComparisonReport {
    pub fn stats(&self, scheme: Scheme) -> Option<&SchemeStats> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    pub fn gain(&self, scheme: Scheme, baseline: Scheme) -> Option<f64> {
        self.gains.iter().find(|g| g.scheme == scheme && g.baseline == baseline).map(|g| g.gain_percent)
    }

    /// `d3qn+advisor > ddqn+advisor > dqn+advisor`, when all three are present.
    pub fn full_ordering_holds(&self) -> Option<bool> {
        let d3 = self.stats(Scheme::D3qnAdvisor)?.final_mean;
        let dd = self.stats(Scheme::DdqnAdvisor)?.final_mean;
        let dq = self.stats(Scheme::DqnAdvisor)?.final_mean;
        Some(d3 > dd && dd > dq)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# Scheme comparison\n");
        let _ = writeln!(md, "Mean training return (env reward only) over the final {} episodes of each run.\n", self.final_window);
        let _ = writeln!(md, "| scheme | runs | seeds | final mean | std across runs |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for s in &self.schemes {
            let seeds: Vec<String> = s.seeds.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(md, "| {} | {} | {} | {:.2} | {:.2} |", s.scheme, s.runs, seeds.join(", "), s.final_mean, s.final_std);
        }
        let _ = writeln!(md, "\n## Pairwise gains\n");
        let _ = writeln!(md, "| scheme | vs. | gain % |");
        let _ = writeln!(md, "|---|---|---|");
        for g in &self.gains {
            let _ = writeln!(md, "| {} | {} | {:+.2} |", g.scheme, g.baseline, g.gain_percent);
        }
        if let Some(ok) = self.full_ordering_holds() {
            let _ = writeln!(md, "\nOrdering d3qn+advisor > ddqn+advisor > dqn+advisor: {}", if ok { "holds" } else { "does not hold" });
        }
        md
    }

    /// Writes `report.md`, `report.csv` (pairwise gains), `schemes.csv` and `convergence.svg`.
    pub fn write(&self, dir: &Path, smoothing_window: usize) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
        let md = dir.join("report.md");
        std::fs::write(&md, self.to_markdown()).map_err(HarnessError::io(&md))?;
        let gains = dir.join("report.csv");
        let mut log = CsvLog::create(&gains)?;
        for g in &self.gains {
            log.write(g).map_err(HarnessError::io(&gains))?;
        }
        let stats = dir.join("schemes.csv");
        let mut log = CsvLog::create(&stats)?;
        for s in &self.schemes {
            let row = (s.scheme, s.runs, s.final_mean, s.final_std);
            log.write(&row).map_err(HarnessError::io(&stats))?;
        }
        let svg = dir.join("convergence.svg");
        let spec = PlotSpec {
            title: format!("Training return, moving average over {smoothing_window} episodes"),
            smoothing_window,
            ..PlotSpec::default()
        };
        let curves: Vec<Series> = self.curves.iter().filter(|c| !c.points.is_empty()).cloned().collect();
        render_plot(&curves, &spec, &svg)?;
        Ok(vec![md, gains, stats, svg])
    }
}
