//! Command-line front end over checkpoint directories.
//!
//! Exit codes: 0 success, 1 data or configuration error, 2 usage error.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::KMeansParams;
use crate::correlation::{join_performance, kendall_tau, read_performance_csv};
use crate::dse::{dse_components, dse_series, write_components_csv, CheckpointSeries, ComponentRecord, MetricConfig};
use crate::error::{DseError, Result};
use crate::rng;
use crate::selection::{select_top, DEFAULT_TOP_T, DEFAULT_WINDOW};
use crate::separability::{GroupConfig, SeparabilityConfig};
use crate::synth_data::{generate_trajectory, TrajectorySpec};
use crate::tensor_io::{list_checkpoints, load_embeddings, save_embeddings, Dtype, RepresentationMatrix, DEFAULT_B_PRIME};
use crate::theory_lab::{
    dim_decay_experiment, instance_margin_accuracy, k_sweep_experiment, non_increasing_within, sample_mixture,
    thm1_trials, BoundConstants, DimDecaySpec, MixtureSpec,
};

pub const LOG_ENV: &str = "DSE_LOG";

fn io(path: &Path, source: std::io::Error) -> DseError {
    DseError::io(path, source)
}

#[derive(Debug, Parser)]
#[command(name = "dse", version, about = "Label-free scoring of dense representations across checkpoints")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Clone, Args)]
pub struct GlobalArgs {
    /// Directory of `.npy` checkpoint dumps, each of shape (images, patches, dim).
    #[arg(long, global = true)]
    pub input_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on images sampled for the effective rank.
    #[arg(long, global = true)]
    pub b_prime: Option<usize>,
    /// Clustering groups as `images:k` pairs, e.g. `1:3,8:24`.
    #[arg(long, global = true)]
    pub sep_configs: Option<String>,
    /// Fixed λ instead of the ratio of standard deviations.
    #[arg(long = "lambda", global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub window: Option<usize>,
    #[arg(long, global = true)]
    pub top_t: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file with any of the above keys; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every checkpoint in `--input-dir`.
    Compute,
    /// Pick checkpoints from a scored series.
    Select {
        /// Defaults to `<output>/series.json`.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Kendall's τ between series scores and a `source_id,value` CSV.
    Tau {
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        perf: PathBuf,
    },
    /// Synthetic experiments: prop1, thm1, cor1, ksweep, trajectory.
    Synth {
        name: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Dimensions for `cor1`, comma separated.
        #[arg(long)]
        dims: Option<String>,
        /// Cluster counts for `ksweep`, comma separated.
        #[arg(long)]
        ks: Option<String>,
        /// JSON file with the experiment's parameters.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

/// Settings shared by every subcommand after merging defaults, the config
/// file and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub b_prime: usize,
    pub sep_configs: Vec<GroupConfig>,
    pub lambda_override: Option<f64>,
    pub window: usize,
    pub top_t: usize,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("."),
            output: PathBuf::from("."),
            seed: 0,
            b_prime: DEFAULT_B_PRIME,
            sep_configs: SeparabilityConfig::default().groups,
            lambda_override: None,
            window: DEFAULT_WINDOW,
            top_t: DEFAULT_TOP_T,
            jobs: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input_dir: Option<PathBuf>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    b_prime: Option<usize>,
    sep_configs: Option<String>,
    lambda: Option<f64>,
    window: Option<usize>,
    top_t: Option<usize>,
    jobs: Option<usize>,
}

pub fn parse_sep_configs(s: &str) -> Result<Vec<GroupConfig>> {
    let groups = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (b, k) = pair
                .split_once(':')
                .ok_or_else(|| DseError::Config(format!("sep config {pair:?} is not images:k")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| DseError::Config(format!("sep config {pair:?} needs positive integers")))
            };
            Ok(GroupConfig::new(num(b)?, num(k)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if groups.is_empty() {
        return Err(DseError::Config("no sep configs given".into()));
    }
    Ok(groups)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|v| v.parse().map_err(|_| DseError::Config(format!("bad {what} entry {v:?}"))))
        .collect()
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| DseError::Config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let d = Self::default();
        let sep = args.sep_configs.clone().or(file.sep_configs);
        let cfg = Self {
            input_dir: args.input_dir.clone().or(file.input_dir).unwrap_or(d.input_dir),
            output: args.output.clone().or(file.output).unwrap_or(d.output),
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            b_prime: args.b_prime.or(file.b_prime).unwrap_or(d.b_prime),
            sep_configs: match sep {
                Some(s) => parse_sep_configs(&s)?,
                None => d.sep_configs,
            },
            lambda_override: args.lambda.or(file.lambda),
            window: args.window.or(file.window).unwrap_or(d.window),
            top_t: args.top_t.or(file.top_t).unwrap_or(d.top_t),
            jobs: args.jobs.or(file.jobs),
        };
        if cfg.b_prime == 0 {
            return Err(DseError::Config("b_prime must be positive".into()));
        }
        if cfg.top_t == 0 {
            return Err(DseError::Config("top_t must be positive".into()));
        }
        if cfg.jobs == Some(0) {
            return Err(DseError::Config("jobs must be positive".into()));
        }
        if let Some(l) = cfg.lambda_override {
            if !l.is_finite() {
                return Err(DseError::Config(format!("lambda must be finite, got {l}")));
            }
        }
        Ok(cfg)
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            separability: SeparabilityConfig {
                groups: self.sep_configs.clone(),
                kmeans: KMeansParams::default(),
            },
            b_prime: self.b_prime,
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let cfg = RunConfig::resolve(&cli.global)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| DseError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Compute => cmd_compute(&cfg),
        Command::Select { series } => cmd_select(&cfg, &series_path(&cfg, series)),
        Command::Tau { series, perf } => cmd_tau(&cfg, &series_path(&cfg, series), &perf),
        Command::Synth {
            name,
            trials,
            dims,
            ks,
            spec,
        } => cmd_synth(
            &cfg,
            &SynthArgs {
                name,
                trials,
                dims,
                ks,
                spec,
            },
        ),
    })
}

fn series_path(cfg: &RunConfig, explicit: Option<PathBuf>) -> PathBuf {
    explicit.unwrap_or_else(|| cfg.output.join("series.json"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| io(path, e))?;
    w.flush().map_err(|e| io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_text(path, &s)
}

fn read_series(path: &Path) -> Result<CheckpointSeries> {
    let file = File::open(path).map_err(|e| io(path, e))?;
    CheckpointSeries::from_json(BufReader::new(file))
}

/// Writes `components.csv`, `series.json` and `series.csv` for every
/// checkpoint in the input directory.
pub fn cmd_compute(cfg: &RunConfig) -> Result<i32> {
    let files = list_checkpoints(&cfg.input_dir)?;
    if files.is_empty() {
        eprintln!("no checkpoints found in {}", cfg.input_dir.display());
        return Ok(1);
    }
    let metric = cfg.metric_config();
    info!("scoring {} checkpoints", files.len());
    let results: Vec<(PathBuf, Result<ComponentRecord>)> = files
        .par_iter()
        .map(|path| {
            let rec = load_embeddings(path).and_then(|b| dse_components(&b, &metric, cfg.seed));
            (path.clone(), rec)
        })
        .collect();

    let mut failed = 0;
    let mut records = Vec::new();
    for (path, rec) in results {
        match rec {
            Ok(r) => records.push(r),
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e}", path.display());
            }
        }
    }
    records.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    if records.is_empty() {
        return Ok(1);
    }
    let path = cfg.output.join("components.csv");
    write_components_csv(&records, create(&path)?)?;

    let series = match dse_series(records, cfg.lambda_override) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(1);
        }
    };
    for w in &series.warnings {
        warn!("{w}");
    }
    write_text(&cfg.output.join("series.json"), &series.to_json())?;
    series.write_csv(create(&cfg.output.join("series.csv"))?)?;
    println!("scored {} checkpoints, lambda = {}", series.records.len(), series.lambda);
    Ok(if failed > 0 { 1 } else { 0 })
}

#[derive(Debug, Serialize)]
struct SelectionReport {
    window: usize,
    top_t: usize,
    candidates: Vec<String>,
    selected: Vec<String>,
    candidate_indices: Vec<usize>,
    selected_indices: Vec<usize>,
}

pub fn cmd_select(cfg: &RunConfig, series_path: &Path) -> Result<i32> {
    let series = read_series(series_path)?;
    let sel = select_top(&series.scores, cfg.window, cfg.top_t);
    let id = |i: &usize| series.records[*i].source_id.clone();
    let report = SelectionReport {
        window: sel.window,
        top_t: sel.top_t,
        candidates: sel.candidate_indices.iter().map(id).collect(),
        selected: sel.selected_indices.iter().map(id).collect(),
        candidate_indices: sel.candidate_indices,
        selected_indices: sel.selected_indices,
    };
    for s in &report.selected {
        println!("{s}");
    }
    write_json(&cfg.output.join("selection.json"), &report)?;
    Ok(0)
}

pub fn cmd_tau(cfg: &RunConfig, series_path: &Path, perf_path: &Path) -> Result<i32> {
    let series = read_series(series_path)?;
    let perf = read_performance_csv(BufReader::new(File::open(perf_path).map_err(|e| io(perf_path, e))?))?;
    let values = join_performance(series.source_ids(), &perf)?;
    let report = kendall_tau(&series.scores, &values)?;
    println!("tau = {}", report.tau);
    println!("p_value = {:e}", report.p_value);
    write_json(&cfg.output.join("tau.json"), &report)?;
    Ok(0)
}

pub struct SynthArgs {
    pub name: String,
    pub trials: Option<usize>,
    pub dims: Option<String>,
    pub ks: Option<String>,
    pub spec: Option<PathBuf>,
}

fn read_spec<T: for<'de> Deserialize<'de>>(path: &Option<PathBuf>, default: T) -> Result<T> {
    match path {
        Some(p) => {
            let file = File::open(p).map_err(|e| io(p, e))?;
            serde_json::from_reader(BufReader::new(file)).map_err(|e| DseError::Config(format!("{}: {e}", p.display())))
        }
        None => Ok(default),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(e: csv::Error) -> DseError {
    DseError::Format(format!("csv: {e}"))
}

pub fn cmd_synth(cfg: &RunConfig, args: &SynthArgs) -> Result<i32> {
    match args.name.as_str() {
        "prop1" => synth_prop1(cfg, args.trials.unwrap_or(100)),
        "thm1" => synth_thm1(cfg, args),
        "cor1" => synth_cor1(cfg, args),
        "ksweep" => synth_ksweep(cfg, args),
        "trajectory" => synth_trajectory(cfg, args),
        other => {
            eprintln!("unknown experiment {other:?}; expected prop1, thm1, cor1, ksweep or trajectory");
            Ok(1)
        }
    }
}

#[derive(Debug, Serialize)]
struct Prop1Row {
    trial: usize,
    m: usize,
    d: usize,
    k: usize,
    accuracy: f64,
}

/// Random matrices with `m ∈ [50, 500]`, `d ∈ [2, 64]`, `k ∈ [2, 10]`.
pub fn prop1_trials(seed: u64, trials: usize) -> Result<Vec<(usize, usize, usize, f64)>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(seed, &[t as u64]);
            let m = r.random_range(50..=500);
            let d = r.random_range(2..=64);
            let k = r.random_range(2..=10);
            let data = (0..m * d).map(|_| r.random_range(-1.0..1.0)).collect();
            let matrix = RepresentationMatrix::from_row_major(data, m, d)?;
            let acc = instance_margin_accuracy(&matrix, k, r.random())?;
            Ok((m, d, k, acc))
        })
        .collect()
}

fn synth_prop1(cfg: &RunConfig, trials: usize) -> Result<i32> {
    let rows = prop1_trials(cfg.seed, trials)?;
    let mut w = csv_writer(&cfg.output.join("prop1.csv"))?;
    for (trial, &(m, d, k, accuracy)) in rows.iter().enumerate() {
        w.serialize(Prop1Row { trial, m, d, k, accuracy }).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io(&cfg.output, e))?;
    let below = rows.iter().filter(|r| r.3 != 1.0).count();
    if below == 0 {
        println!("all {trials} trials: estimated accuracy = 1.0");
        Ok(0)
    } else {
        println!("{below} of {trials} trials: estimated accuracy below 1.0");
        Ok(1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Thm1Spec {
    pub num_classes: usize,
    pub dims: Vec<usize>,
    /// Pairwise mean separation in units of `R√d`.
    pub separations: Vec<f64>,
    pub per_class_std: f64,
    pub samples_per_class: usize,
    pub delta: f64,
    pub constants: BoundConstants,
    pub trials: usize,
}

impl Default for Thm1Spec {
    fn default() -> Self {
        Self {
            num_classes: 3,
            dims: vec![4, 16],
            separations: vec![1.0, 2.0, 4.0, 8.0],
            per_class_std: 1.0,
            samples_per_class: 1000,
            delta: 0.05,
            constants: BoundConstants::default(),
            trials: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Thm1Row {
    pub dim: usize,
    pub separation: f64,
    pub trial: usize,
    pub empirical_err: f64,
    pub margin_cdf_term: f64,
    pub c_delta: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn thm1_sweep(spec: &Thm1Spec, seed: u64) -> Result<Vec<Thm1Row>> {
    let mut rows = Vec::new();
    for (di, &dim) in spec.dims.iter().enumerate() {
        for (si, &sep) in spec.separations.iter().enumerate() {
            let mix = MixtureSpec::equidistant(
                spec.num_classes,
                dim,
                sep * spec.per_class_std * (dim as f64).sqrt(),
                spec.per_class_std,
                spec.samples_per_class,
                rng::derive_seed(seed, &[di as u64, si as u64]),
            )?;
            for (trial, r) in thm1_trials(&mix, spec.trials, spec.delta, spec.constants)?.into_iter().enumerate() {
                rows.push(Thm1Row {
                    dim,
                    separation: sep,
                    trial,
                    empirical_err: r.empirical_err,
                    margin_cdf_term: r.margin_cdf_term,
                    c_delta: r.c_delta,
                    bound: r.bound,
                    holds: r.holds,
                });
            }
        }
    }
    Ok(rows)
}

fn synth_thm1(cfg: &RunConfig, args: &SynthArgs) -> Result<i32> {
    let mut spec = read_spec(&args.spec, Thm1Spec::default())?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    let rows = thm1_sweep(&spec, cfg.seed)?;
    let mut w = csv_writer(&cfg.output.join("thm1.csv"))?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io(&cfg.output, e))?;
    let held = rows.iter().filter(|r| r.holds).count();
    write_json(&cfg.output.join("thm1.json"), &BTreeMap::from([("spec", serde_json::to_value(&spec).unwrap()), ("held", held.into()), ("trials", rows.len().into())]))?;
    println!("bound held in {held} of {} trials", rows.len());
    Ok(0)
}

fn synth_cor1(cfg: &RunConfig, args: &SynthArgs) -> Result<i32> {
    let mut spec = read_spec(
        &args.spec,
        DimDecaySpec {
            seed: cfg.seed,
            ..Default::default()
        },
    )?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    let dims = match &args.dims {
        Some(s) => parse_list(s, "dims")?,
        None => vec![1, 4, 16, 64],
    };
    if dims.is_empty() || dims.contains(&0) {
        return Err(DseError::Config("dims must be positive".into()));
    }
    let points = dim_decay_experiment(&spec, &dims)?;
    let mut w = csv_writer(&cfg.output.join("cor1.csv"))?;
    for p in &points {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io(&cfg.output, e))?;
    for p in &points {
        println!("d = {:>4}  err = {:.6}  se = {:.6}", p.dim, p.error, p.std_error);
    }
    println!("non-increasing within 2 SE: {}", non_increasing_within(&points, 2.0));
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KSweepSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub separation: f64,
    pub per_class_std: f64,
    pub samples_per_class: usize,
    pub delta: f64,
    pub constants: BoundConstants,
}

impl Default for KSweepSpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            dim: 8,
            separation: 40.0,
            per_class_std: 1.0,
            samples_per_class: 200,
            delta: 0.05,
            constants: BoundConstants::default(),
        }
    }
}

fn synth_ksweep(cfg: &RunConfig, args: &SynthArgs) -> Result<i32> {
    let spec = read_spec(&args.spec, KSweepSpec::default())?;
    let ks = match &args.ks {
        Some(s) => parse_list(s, "ks")?,
        None => vec![1, 2, 4, 8],
    };
    let mix = MixtureSpec::equidistant(
        spec.num_classes,
        spec.dim,
        spec.separation,
        spec.per_class_std,
        spec.samples_per_class,
        cfg.seed,
    )?;
    let points = k_sweep_experiment(&sample_mixture(&mix)?, &ks, spec.delta, spec.constants, cfg.seed)?;
    let mut w = csv_writer(&cfg.output.join("ksweep.csv"))?;
    for p in &points {
        w.serialize(p).map_err(csv_err)?;
        println!("k = {:>3}  margin term = {:.6}", p.k, p.margin_cdf_term);
    }
    w.flush().map_err(|e| io(&cfg.output, e))?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct AccuracyRow<'a> {
    source_id: &'a str,
    value: f64,
}

fn synth_trajectory(cfg: &RunConfig, args: &SynthArgs) -> Result<i32> {
    let spec = read_spec(
        &args.spec,
        TrajectorySpec {
            seed: cfg.seed,
            ..Default::default()
        },
    )?;
    let traj = generate_trajectory(&spec)?;
    let mut w = csv_writer(&cfg.output.join("accuracy.csv"))?;
    for c in &traj {
        let id = c.batch.source_id();
        save_embeddings(cfg.output.join(format!("{id}.npy")), &c.batch, Dtype::F64)?;
        w.serialize(AccuracyRow {
            source_id: id,
            value: c.true_nn_accuracy,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| io(&cfg.output, e))?;
    println!("wrote {} checkpoints to {}", traj.len(), cfg.output.display());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sep_config_parsing() {
        assert_eq!(parse_sep_configs("1:3,8:24").unwrap(), vec![GroupConfig::new(1, 3), GroupConfig::new(8, 24)]);
        assert_eq!(parse_sep_configs(" 2 : 5 ").unwrap(), vec![GroupConfig::new(2, 5)]);
        for bad in ["", "1", "1:0", "a:3", "1:3,x"] {
            assert!(parse_sep_configs(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(&GlobalArgs::default()).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.seed, cfg.b_prime, cfg.window, cfg.top_t), (0, 2048, 2, 3));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "seed = 7\nwindow = 4\nsep_configs = \"1:2\"\nlambda = 0.5\n").unwrap();
        let args = GlobalArgs {
            config: Some(path.clone()),
            seed: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.window, 4);
        assert_eq!(cfg.sep_configs, vec![GroupConfig::new(1, 2)]);
        assert_eq!(cfg.lambda_override, Some(0.5));

        fs::write(&path, "sede = 1\n").unwrap();
        assert!(matches!(RunConfig::resolve(&args), Err(DseError::Config(_))));
    }

    #[test]
    fn invalid_settings() {
        for args in [
            GlobalArgs {
                b_prime: Some(0),
                ..Default::default()
            },
            GlobalArgs {
                top_t: Some(0),
                ..Default::default()
            },
            GlobalArgs {
                jobs: Some(0),
                ..Default::default()
            },
        ] {
            assert!(RunConfig::resolve(&args).is_err());
        }
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["dse"]), 2);
        assert_eq!(run(["dse", "compute", "--seed", "x"]), 2);
        assert_eq!(run(["dse", "frobnicate"]), 2);
        assert_eq!(run(["dse", "--help"]), 0);
    }
}
