//! The `mobo` command line.
//!
//! Every result-affecting parameter ends up in the resolved config written
//! next to the outputs; passing that file back with `--config` replays the
//! run exactly.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::acquisition::{normalize_weights, AcquisitionKind, DrawMode};
use crate::dataset::{generate_synthetic, load_dataset, write_dataset, SyntheticSpec};
use crate::engine::{
    front_circles, run, run_suite, summarize, CandidatePool, RunConfig, RunOutcome, TrialSummary,
};
use crate::error::{Error, Result};
use crate::fingerprint::{DistanceKind, KernelKind};
use crate::metrics::CirclesMethod;
use crate::pareto::{non_dominated_filter, ObjectiveVector, ReferencePoint};
use crate::report::{
    read_archive, read_json, read_round_log, recompute_curves, render_summary, trial_dir_name,
    write_archive, write_circles, write_curves, write_json, write_round_log, write_summary,
};

#[derive(Debug, Parser)]
#[command(name = "mobo", version, about = "Pool-based multi-objective Bayesian optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one (dataset, acquisition, seed) trial.
    Run(RunArgs),
    /// Run seeds × acquisitions and write a summary.
    Suite(SuiteArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Check a dataset file.
    Validate(ValidateArgs),
    /// Recompute metrics from existing run directories.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CliDrawMode {
    Common,
    Fresh,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CliKernel {
    Minmax,
    Tanimoto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CliCircles {
    Exact,
    Greedy,
}

/// Parameters shared by `run` and `suite`. Unset values take the defaults
/// listed in the help text.
#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// BO rounds after the initial design [default: 200]
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Initial design size [default: 10]
    #[arg(long)]
    pub init_size: Option<usize>,
    /// Monte-Carlo draws per EHVI evaluation [default: 1000]
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Scalarization weights, normalized to sum to one [default: uniform]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    /// Hypervolume reference point [default: origin]
    #[arg(long = "ref", value_delimiter = ',', allow_negative_numbers = true)]
    pub reference: Option<Vec<f64>>,
    /// Das-Dennis granularity H for the R2 directions [default: 12]
    #[arg(long)]
    pub directions_h: Option<usize>,
    /// #Circles distance thresholds [default: 0.50,0.55,...,0.90]
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// EHVI draw sharing across candidates [default: common]
    #[arg(long, value_enum)]
    pub draw_mode: Option<CliDrawMode>,
    /// GP kernel [default: minmax]
    #[arg(long, value_enum)]
    pub kernel: Option<CliKernel>,
    /// #Circles packing [default: exact]
    #[arg(long, value_enum)]
    pub circles_method: Option<CliCircles>,
    /// GP kernel amplitude [default: 1.0]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// GP observation noise variance [default: 1e-4]
    #[arg(long)]
    pub noise_variance: Option<f64>,
    /// Score candidates on one thread
    #[arg(long)]
    pub sequential: bool,
    /// Record wall-clock time per round (logs are then not reproducible)
    #[arg(long)]
    pub timing: bool,
}

/// Flags that cannot be combined with `--config`.
const RUN_REPLAY_CONFLICTS: [&str; 16] = [
    "acquisition",
    "seed",
    "rounds",
    "init_size",
    "mc_samples",
    "weights",
    "reference",
    "directions_h",
    "thresholds",
    "draw_mode",
    "kernel",
    "circles_method",
    "amplitude",
    "noise_variance",
    "sequential",
    "timing",
];

const SUITE_REPLAY_CONFLICTS: [&str; 16] = [
    "acquisitions",
    "seeds",
    "rounds",
    "init_size",
    "mc_samples",
    "weights",
    "reference",
    "directions_h",
    "thresholds",
    "draw_mode",
    "kernel",
    "circles_method",
    "amplitude",
    "noise_variance",
    "sequential",
    "timing",
];

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Dataset file (mobo-dataset/1)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "ehvi")]
    pub acquisition: AcquisitionKind,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replay a resolved config.json instead of the flags
    #[arg(long, conflicts_with_all = RUN_REPLAY_CONFLICTS)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "ehvi,scalarized-ei,random")]
    pub acquisitions: Vec<AcquisitionKind>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    /// Replay a resolved suite.json instead of the flags
    #[arg(long, conflicts_with_all = SUITE_REPLAY_CONFLICTS)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 2048)]
    pub n_features: usize,
    #[arg(long, default_value_t = 0.02)]
    pub density: f64,
    /// Output dataset file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    pub dataset: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run directories written by `run` or `suite`
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Output directory for the recomputed summary
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset the runs used; needed for #Circles
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

/// Resolved configuration of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub acquisitions: Vec<AcquisitionKind>,
    pub seeds: Vec<u64>,
    /// Shared settings; its acquisition kind and seed are overridden per trial.
    pub run: RunConfig,
}

impl ExperimentArgs {
    /// Applies the flags on top of the defaults for `d` objectives.
    pub fn resolve(&self, kind: AcquisitionKind, seed: u64, d: usize) -> Result<RunConfig> {
        let mut c = RunConfig::new(kind, d).with_seed(seed);
        if let Some(v) = self.rounds {
            c.rounds = v;
        }
        if let Some(v) = self.init_size {
            c.init_size = v;
        }
        if let Some(v) = self.mc_samples {
            c.acquisition.mc_samples = v;
        }
        if let Some(w) = &self.weights {
            if w.len() != d {
                return Err(Error::InvalidConfig(format!("--weights needs {d} values, got {}", w.len())));
            }
            c.acquisition.weights = normalize_weights(w)?;
        }
        if let Some(r) = &self.reference {
            c.acquisition.reference = ReferencePoint(r.clone());
        }
        if let Some(h) = self.directions_h {
            c.direction_granularity = h;
        }
        if let Some(t) = &self.thresholds {
            c.circle_thresholds = t.clone();
        }
        if let Some(m) = self.draw_mode {
            c.acquisition.draw_mode = match m {
                CliDrawMode::Common => DrawMode::Common,
                CliDrawMode::Fresh => DrawMode::Fresh,
            };
        }
        if let Some(k) = self.kernel {
            (c.kernel, c.circle_distance) = match k {
                CliKernel::Minmax => (KernelKind::MinMax, DistanceKind::MinMax),
                CliKernel::Tanimoto => (KernelKind::Tanimoto, DistanceKind::BinaryTanimoto),
            };
        }
        if let Some(m) = self.circles_method {
            c.circles_method = match m {
                CliCircles::Exact => CirclesMethod::Exact,
                CliCircles::Greedy => CirclesMethod::Greedy,
            };
        }
        if let Some(a) = self.amplitude {
            c.gp.amplitude = a;
        }
        if let Some(s) = self.noise_variance {
            c.gp.noise_variance = s;
        }
        c.parallel = !self.sequential;
        c.record_wall_time = self.timing;
        Ok(c)
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes config.json, round_log.csv, archive.csv and circles.csv.
pub fn write_run_outputs(dir: &Path, pool: &CandidatePool, out: &RunOutcome) -> Result<()> {
    create_dir(dir)?;
    write_json(dir.join("config.json"), &out.config)?;
    write_round_log(dir.join("round_log.csv"), &out.records, pool.dim())?;
    write_archive(dir.join("archive.csv"), pool, &out.archive)?;
    write_circles(dir.join("circles.csv"), &out.circles)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let (_, pool) = load_dataset(&args.dataset)?;
    let config = match &args.config {
        Some(p) => read_json::<RunConfig>(p)?,
        None => args.experiment.resolve(args.acquisition, args.seed, pool.dim())?,
    };
    let out = run(&pool, &config)?;
    write_run_outputs(&args.out, &pool, &out)?;
    println!(
        "{} seed {}: {} rounds, final hv {} r2 {}, front size {}",
        config.acquisition.kind.slug(),
        config.master_seed,
        out.records.len(),
        out.final_hv(),
        out.final_r2(),
        out.front.len()
    );
    Ok(())
}

fn cmd_suite(args: &SuiteArgs) -> Result<()> {
    let (header, pool) = load_dataset(&args.dataset)?;
    let suite = match &args.config {
        Some(p) => read_json::<SuiteConfig>(p)?,
        None => {
            let first = *args
                .acquisitions
                .first()
                .ok_or_else(|| Error::InvalidConfig("no acquisitions given".into()))?;
            let seed = args.seeds.first().copied().unwrap_or(0);
            SuiteConfig {
                acquisitions: args.acquisitions.clone(),
                seeds: args.seeds.clone(),
                run: args.experiment.resolve(first, seed, pool.dim())?,
            }
        }
    };
    let mut seen = HashSet::new();
    if suite.acquisitions.iter().any(|k| !seen.insert(*k)) {
        return Err(Error::InvalidConfig("acquisition listed twice".into()));
    }
    let mut seen = HashSet::new();
    if suite.seeds.iter().any(|s| !seen.insert(*s)) {
        return Err(Error::InvalidConfig("seed listed twice".into()));
    }
    create_dir(&args.out)?;
    write_json(args.out.join("suite.json"), &suite)?;
    let runs_dir = args.out.join("runs");
    let results = run_suite(
        &pool,
        &suite.run,
        &header.task,
        &suite.seeds,
        &suite.acquisitions,
        |out| {
            let dir = runs_dir.join(trial_dir_name(out.config.acquisition.kind, out.config.master_seed));
            write_run_outputs(&dir, &pool, out)?;
            eprintln!(
                "finished {} seed {}: final hv {}",
                out.config.acquisition.kind.slug(),
                out.config.master_seed,
                out.final_hv()
            );
            Ok(())
        },
    )?;
    write_summary(&results, args.out.join("summary.txt"), args.out.join("summary.json"))?;
    write_curves(args.out.join("curves.csv"), &results)?;
    print!("{}", render_summary(&results));
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let task = generate_synthetic(SyntheticSpec {
        seed: args.seed,
        n: args.n,
        d: args.d,
        n_features: args.n_features,
        density: args.density,
    })?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_dataset(&args.out, &task.header, &task.pool)?;
    println!("wrote {} records to {}", task.pool.len(), args.out.display());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let (header, pool) = load_dataset(&args.dataset)?;
    println!(
        "ok: {}: task '{}', {} records, {} objectives ({})",
        args.dataset.display(),
        header.task,
        pool.len(),
        pool.dim(),
        header.objective_names.join(", ")
    );
    Ok(())
}

/// Rebuilds one trial from its directory, checking the logged metrics.
fn recompute_trial(dir: &Path, pool: Option<&CandidatePool>) -> Result<(RunConfig, TrialSummary)> {
    let config: RunConfig = read_json(dir.join("config.json"))?;
    let rows = read_archive(dir.join("archive.csv"))?;
    let (records, _) = read_round_log(dir.join("round_log.csv"))?;
    let (hv, r2) = recompute_curves(&rows, &config)?;
    let logged: Vec<(f64, f64)> = records.iter().map(|r| (r.hv, r.r2)).collect();
    let recomputed: Vec<(f64, f64)> = hv.iter().copied().zip(r2.iter().copied()).skip(1).collect();
    if logged != recomputed {
        return Err(Error::InvalidInput(format!(
            "{}: round log metrics disagree with the archive",
            dir.display()
        )));
    }
    let circles = match pool {
        Some(pool) => {
            let entries = rows
                .iter()
                .map(|r| {
                    pool.index_of(&r.id)
                        .map(|i| (i, ObjectiveVector(r.objectives.clone())))
                        .ok_or_else(|| Error::InvalidInput(format!("id '{}' not in dataset", r.id)))
                })
                .collect::<Result<Vec<_>>>()?;
            front_circles(pool, &non_dominated_filter(&entries), &config)?
        }
        None => Vec::new(),
    };
    let trial = TrialSummary {
        acquisition: config.acquisition.kind,
        seed: config.master_seed,
        final_hv: *hv.last().expect("initial point present"),
        final_r2: *r2.last().expect("initial point present"),
        hv_curve: hv,
        r2_curve: r2,
        circles,
    };
    Ok((config, trial))
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let loaded = args.dataset.as_ref().map(load_dataset).transpose()?;
    let pool = loaded.as_ref().map(|(_, p)| p);
    let task = loaded
        .as_ref()
        .map_or_else(|| "report".to_string(), |(h, _)| h.task.clone());
    let mut base: Option<RunConfig> = None;
    let mut kinds = Vec::new();
    let mut seeds = Vec::new();
    let mut trials = Vec::new();
    for dir in &args.runs {
        let (config, trial) = recompute_trial(dir, pool)?;
        let shared = config.clone().with_kind(AcquisitionKind::Ehvi).with_seed(0);
        match &base {
            None => base = Some(shared),
            Some(b) if *b != shared => {
                return Err(Error::InvalidInput(format!(
                    "{}: settings differ from the first run beyond acquisition and seed",
                    dir.display()
                )))
            }
            Some(_) => {}
        }
        if !kinds.contains(&trial.acquisition) {
            kinds.push(trial.acquisition);
        }
        if !seeds.contains(&trial.seed) {
            seeds.push(trial.seed);
        }
        trials.push(trial);
    }
    let base = base.expect("at least one run directory");
    let results = summarize(&task, &base, &seeds, &kinds, trials)?;
    create_dir(&args.out)?;
    write_summary(&results, args.out.join("summary.txt"), args.out.join("summary.json"))?;
    write_curves(args.out.join("curves.csv"), &results)?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(render_summary(&results).as_bytes());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Report(a) => cmd_report(a),
    }
}
