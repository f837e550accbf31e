use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lanefusion::checkpoint::Checkpoint;
use lanefusion::compare::{compare_runs, load_runs};
use lanefusion::config::{load_config, ExperimentConfig, Scheme};
use lanefusion::error::{HarnessError, Result};
use lanefusion::feedback_log::JsonlSink;
use lanefusion::metrics::{mean_std, read_metrics};
use lanefusion::plot::{render_plot, PlotSpec, Series};
use lanefusion::run::{evaluate, train_run};
use lanefusion::scenes::export_scenes;
use lanefusion::sweep::{sweep_hv_counts, write_sweep, SweepMode, SweepOptions, DEFAULT_COUNTS};
use lanefusion_core::fusion::AdvisorKind;
use lanefusion_core::rollout::{eval_seed, evaluate_greedy};

#[derive(Parser, Debug)]
#[command(name = "lanefusion", version, about = "Train, sweep and compare advisor-fused lane-change agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one or more schemes over the configured seeds.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Greedy evaluation of a saved checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to load (defaults to <out>/<scheme>/<seed>/checkpoint.json).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Number of evaluation episodes.
        #[arg(long, default_value_t = 100)]
        eval_episodes: u64,
        /// Write every evaluation step as JSON lines to this file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Evaluation return against the number of human-driven vehicles.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated vehicle counts.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_COUNTS.to_vec())]
        counts: Vec<usize>,
        #[arg(long, default_value = "retrain")]
        sweep_mode: SweepMode,
        #[arg(long, default_value_t = lanefusion::sweep::SWEEP_EVAL_EPISODES)]
        eval_episodes: u64,
    },
    /// Compare finished runs: final-window means, pairwise gains, convergence plot.
    Compare {
        /// Run directories, or roots that contain them.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Where the report goes (defaults to the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trailing training episodes averaged per run.
        #[arg(long, default_value_t = 200)]
        final_window: usize,
        #[arg(long, default_value_t = 50)]
        smoothing_window: usize,
        /// Minimum completed runs per scheme.
        #[arg(long, default_value_t = 2)]
        min_runs: usize,
    },
    /// Plot return_env from one or more metrics.csv files.
    Plot {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        /// Output SVG file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        smoothing_window: usize,
        #[arg(long, default_value = "")]
        title: String,
    },
    /// Dump random scenes with the rule advisor's recommendation as JSON lines.
    ExportScenes {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AdvisorArg {
    Rule,
    Bridge,
    Replay,
    None,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment config; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed(s); replaces the config's seed list.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Scheme(s); repeat or comma-separate. Default: d3qn+advisor.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    #[arg(long, value_enum)]
    advisor: Option<AdvisorArg>,
    /// Training episodes per run.
    #[arg(long)]
    episodes: Option<u64>,
    /// Output directory (falls back to the config, then LANEFUSION_OUT, then ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Command line of the external advisor process, shell-quoted.
    #[arg(long)]
    bridge_cmd: Option<String>,
    /// JSON-lines recommendation file for --advisor replay.
    #[arg(long)]
    replay_file: Option<PathBuf>,
    /// Number of human-driven vehicles.
    #[arg(long)]
    humans: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, Vec<Scheme>, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ExperimentConfig::default(),
        };
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(h) = self.humans {
            cfg.sim.human_count = h;
        }
        if let Some(cmd) = &self.bridge_cmd {
            let argv = shlex::split(cmd).ok_or_else(|| HarnessError::config("--bridge-cmd", "unbalanced quoting"))?;
            cfg.advisor = AdvisorKind::Bridge { command: argv };
        }
        match self.advisor {
            Some(AdvisorArg::Rule) => cfg.advisor = AdvisorKind::RuleBased,
            Some(AdvisorArg::None) => cfg.advisor = AdvisorKind::None,
            Some(AdvisorArg::Bridge) if !matches!(cfg.advisor, AdvisorKind::Bridge { .. }) => {
                return Err(HarnessError::config("--bridge-cmd", "--advisor bridge needs --bridge-cmd or a bridge advisor in the config"));
            }
            Some(AdvisorArg::Replay) => {
                let path = self
                    .replay_file
                    .as_ref()
                    .ok_or_else(|| HarnessError::config("--replay-file", "--advisor replay needs --replay-file"))?;
                cfg.advisor = AdvisorKind::Replay { path: path.display().to_string() };
            }
            _ => {}
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .or_else(|| std::env::var_os("LANEFUSION_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        cfg.output_dir = Some(out.clone());
        let mut schemes = if self.scheme.is_empty() { vec![Scheme::D3qnAdvisor] } else { self.scheme.clone() };
        if cfg.advisor == AdvisorKind::None && self.scheme.is_empty() {
            schemes = vec![Scheme::D3qnNoAdvisor];
        }
        for s in &schemes {
            cfg.for_scheme(*s)?;
        }
        Ok((cfg, schemes, out))
    }
}

fn train(common: &Common) -> Result<()> {
    let (cfg, schemes, out) = common.resolve()?;
    for &scheme in &schemes {
        for &seed in &cfg.seeds {
            let run = train_run(&cfg, scheme, seed, &out)?;
            let s = run.manifest.summary.as_ref().expect("completed runs carry a summary");
            println!(
                "{scheme} seed {seed}: {} episodes, final-{} mean return {:.2}, {} collisions -> {}",
                s.episodes,
                s.final_window,
                s.final_mean_return_env,
                s.collisions,
                run.dir.display()
            );
        }
    }
    Ok(())
}

fn eval(common: &Common, checkpoint: Option<&Path>, episodes: u64, trajectory: Option<&Path>) -> Result<()> {
    let (cfg, schemes, out) = common.resolve()?;
    let seed = cfg.seeds[0];
    let path = match checkpoint {
        Some(p) => p.to_path_buf(),
        None => lanefusion::run::run_dir(&out, schemes[0], seed).join(lanefusion::run::CHECKPOINT_FILE),
    };
    let agent = Checkpoint::load(&path)?.into_agent();
    let reports = match trajectory {
        None => evaluate(&agent, &cfg.sim, seed, episodes)?,
        Some(t) => {
            let mut sink = JsonlSink::new(BufWriter::new(File::create(t).map_err(HarnessError::io(t))?));
            let mut reports = Vec::new();
            for i in 0..episodes {
                let r = evaluate_greedy(&agent, &cfg.sim, eval_seed(seed, i), true)?;
                for step in &r.trajectory {
                    sink.write(&serde_json::json!({ "episode": i, "record": step })).map_err(HarnessError::io(t))?;
                }
                reports.push(r);
            }
            sink.flush().map_err(HarnessError::io(t))?;
            reports
        }
    };
    let returns: Vec<f64> = reports.iter().map(|r| r.return_env).collect();
    let (mean, std) = mean_std(&returns);
    let collisions = reports.iter().filter(|r| r.collided).count();
    println!(
        "{}: {episodes} greedy episodes, mean return {mean:.2} (std {std:.2}), {collisions} collisions",
        path.display()
    );
    Ok(())
}

fn sweep(common: &Common, counts: Vec<usize>, mode: SweepMode, eval_episodes: u64) -> Result<()> {
    let (cfg, schemes, out) = common.resolve()?;
    if counts.is_empty() {
        return Err(HarnessError::config("--counts", "needs at least one count"));
    }
    let opts = SweepOptions { counts, schemes, seeds: cfg.seeds.clone(), mode, eval_episodes };
    let rows = sweep_hv_counts(&cfg, &opts);
    let files = write_sweep(&rows, &out.join("sweep"))?;
    for r in &rows {
        if r.error.is_empty() {
            println!("{} {:>3} vehicles: mean {:.2} std {:.2}", r.scheme, r.count, r.mean_return_env, r.std_return_env);
        } else {
            println!("{} {:>3} vehicles: FAILED {}", r.scheme, r.count, r.error);
        }
    }
    println!("wrote {}", files[0].display());
    if rows.iter().any(|r| !r.error.is_empty()) {
        return Err(HarnessError::Invalid("some sweep cells failed".into()));
    }
    Ok(())
}

fn compare(runs: &[PathBuf], out: Option<PathBuf>, final_window: usize, smoothing: usize, min_runs: usize) -> Result<()> {
    let runs = load_runs(runs)?;
    let report = compare_runs(&runs, final_window, min_runs)?;
    let out = out
        .or_else(|| std::env::var_os("LANEFUSION_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
        .join("compare");
    report.write(&out, smoothing)?;
    print!("{}", report.to_markdown());
    Ok(())
}

fn plot(metrics: &[PathBuf], out: &Path, smoothing: usize, title: String) -> Result<()> {
    let mut series = Vec::new();
    for path in metrics {
        let rows = read_metrics(path)?;
        let label = path
            .parent()
            .map(|p| p.iter().rev().take(2).collect::<Vec<_>>().into_iter().rev().collect::<PathBuf>().display().to_string())
            .unwrap_or_else(|| path.display().to_string());
        let ys: Vec<f64> = rows.iter().map(|r| r.return_env).collect();
        series.push(Series::indexed(label, &ys));
    }
    let spec = PlotSpec { title, smoothing_window: smoothing, ..PlotSpec::default() };
    render_plot(&series, &spec, out)
}

fn export(config: Option<&Path>, count: u64, seed: u64, out: Option<&Path>) -> Result<()> {
    let cfg = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    match out {
        Some(p) => {
            let file = File::create(p).map_err(HarnessError::io(p))?;
            export_scenes(&cfg.sim, count, seed, BufWriter::new(file)).map(drop)
        }
        None => export_scenes(&cfg.sim, count, seed, std::io::stdout().lock()).map(drop),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => train(&common),
        Command::Eval { common, checkpoint, eval_episodes, trajectory } => {
            eval(&common, checkpoint.as_deref(), eval_episodes, trajectory.as_deref())
        }
        Command::Sweep { common, counts, sweep_mode, eval_episodes } => sweep(&common, counts, sweep_mode, eval_episodes),
        Command::Compare { runs, out, final_window, smoothing_window, min_runs } => {
            compare(&runs, out, final_window, smoothing_window, min_runs)
        }
        Command::Plot { metrics, out, smoothing_window, title } => plot(&metrics, &out, smoothing_window, title),
        Command::ExportScenes { config, count, seed, out } => export(config.as_deref(), count, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
