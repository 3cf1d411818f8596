//! Command-line front end: `estimate`, `verify`, `run`, `grid`, `synth`.
//!
//! Every experiment flag can also come from a flat `key = value` file given
//! with `--config`; flags on the command line win over the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{self, make_partitioning, Dataset, PartitionOptions, PartitionSpec, Partitioning};
use crate::objective::{Objective, ObjectiveKind};
use crate::optimizer::{self, csv_num, GridEntry, Instance, RunConfig, RunError, RunResult};
use crate::sampling::{SamplingFamily, SamplingVariant, ENUMERATION_LIMIT};
use crate::synthetic::{self, SynthSpec};
use crate::theory::{self, NoiseFormula};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("run diverged at iteration {iter}")]
    Diverged { iter: u64 },
    #[error("{failures} verification check(s) failed")]
    VerificationFailed { failures: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => EXIT_VALIDATION,
            CliError::Diverged { .. } => EXIT_DIVERGED,
            CliError::VerificationFailed { .. } => EXIT_VERIFY_FAILED,
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}
validation_from!(
    dataset::DatasetError,
    crate::objective::ObjectiveError,
    crate::sampling::SamplingError,
    theory::TheoryError
);

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Diverged { iter, .. } => CliError::Diverged { iter },
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adabatch", version, about = "Adaptive mini-batch size SGD experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the tau -> (L, sigma, T) table and the optimal batch size.
    Estimate(ExperimentArgs),
    /// Check the gradient-noise and expected-smoothness formulas by enumeration.
    Verify(ExperimentArgs),
    /// Run adaptive or fixed-batch SGD and write a trace.
    Run(ExperimentArgs),
    /// Fixed-batch runs over a tau grid, compared with the adaptive method.
    Grid(ExperimentArgs),
    /// Write a synthetic dataset in LIBSVM format.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Adaptive,
    Fixed,
    Grid,
}

/// Experiment flags. All values are strings here and parsed once, together
/// with the config file, by [`ExperimentConfig::from_map`].
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Flat `key = value` file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// LIBSVM data file.
    #[arg(long)]
    pub data: Option<String>,
    /// Feature dimension (default: largest index in the file).
    #[arg(long)]
    pub dim: Option<String>,
    /// Scale rows of a data file to unit norm (true/false).
    #[arg(long)]
    pub normalize: Option<String>,
    /// Generate data instead of reading it: number of examples.
    #[arg(long = "synth-n")]
    pub synth_n: Option<String>,
    #[arg(long = "synth-d")]
    pub synth_d: Option<String>,
    #[arg(long = "synth-seed")]
    pub synth_seed: Option<String>,
    /// Label noise standard deviation.
    #[arg(long = "synth-noise")]
    pub synth_noise: Option<String>,
    /// Scale of the planted model; 0 together with zero noise gives b = 0.
    #[arg(long = "synth-signal")]
    pub synth_signal: Option<String>,
    /// ridge or logistic.
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    /// Number of blocks K, or explicit block sizes `n1,n2,...`.
    #[arg(long)]
    pub partitions: Option<String>,
    /// Block probabilities `q1,q2,...` or `uniform`.
    #[arg(long)]
    pub q: Option<String>,
    /// Shuffle examples before splitting into blocks.
    #[arg(long = "partition-seed")]
    pub partition_seed: Option<String>,
    /// nice, independent, pnice or pindependent.
    #[arg(long)]
    pub sampling: Option<String>,
    /// Batch size for `run --mode fixed`.
    #[arg(long)]
    pub tau: Option<String>,
    /// Batch sizes for `estimate` and `grid`: `1,2,8` or `1..20`.
    #[arg(long)]
    pub taus: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    /// Variance cap C (disabled by default).
    #[arg(long)]
    pub cap: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long = "max-epochs")]
    pub max_epochs: Option<String>,
    /// Relative-error target (default eps/10).
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long = "trace-every")]
    pub trace_every: Option<String>,
    /// Random points per formula check in `verify`.
    #[arg(long)]
    pub points: Option<String>,
    /// adaptive, fixed or grid (for `run`).
    #[arg(long)]
    pub mode: Option<String>,
    /// Output file (`estimate`, `verify`) or directory (`run`, `grid`).
    #[arg(long)]
    pub out: Option<String>,
}

const KEYS: &[&str] = &[
    "data",
    "dim",
    "normalize",
    "synth-n",
    "synth-d",
    "synth-seed",
    "synth-noise",
    "synth-signal",
    "objective",
    "lambda",
    "partitions",
    "q",
    "partition-seed",
    "sampling",
    "tau",
    "taus",
    "eps",
    "cap",
    "seed",
    "max-epochs",
    "target",
    "trace-every",
    "points",
    "mode",
    "out",
];

impl ExperimentArgs {
    fn pairs(&self) -> [(&'static str, &Option<String>); 25] {
        [
            ("data", &self.data),
            ("dim", &self.dim),
            ("normalize", &self.normalize),
            ("synth-n", &self.synth_n),
            ("synth-d", &self.synth_d),
            ("synth-seed", &self.synth_seed),
            ("synth-noise", &self.synth_noise),
            ("synth-signal", &self.synth_signal),
            ("objective", &self.objective),
            ("lambda", &self.lambda),
            ("partitions", &self.partitions),
            ("q", &self.q),
            ("partition-seed", &self.partition_seed),
            ("sampling", &self.sampling),
            ("tau", &self.tau),
            ("taus", &self.taus),
            ("eps", &self.eps),
            ("cap", &self.cap),
            ("seed", &self.seed),
            ("max-epochs", &self.max_epochs),
            ("target", &self.target),
            ("trace-every", &self.trace_every),
            ("points", &self.points),
            ("mode", &self.mode),
            ("out", &self.out),
        ]
    }

    /// Config file values overlaid with the flags given on the command line.
    pub fn merged(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut map = match &self.config {
            Some(path) => parse_config(
                &std::fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?,
            )?,
            None => BTreeMap::new(),
        };
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

/// Parses `key = value` lines; `#` starts a comment, `_` in keys reads as `-`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected `key = value`", lineno + 1)));
        };
        let key = k.trim().to_ascii_lowercase().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!("config line {}: unknown key `{key}`", lineno + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File { path: PathBuf, dim: Option<usize>, normalize: bool },
    Synthetic(SynthSpec),
}

/// Fully parsed experiment settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub objective: ObjectiveKind,
    pub lambda: f64,
    pub partitions: PartitionSpec,
    pub partition_opts: PartitionOptions,
    pub sampling: SamplingVariant,
    pub tau: Option<usize>,
    pub taus: Option<Vec<usize>>,
    pub eps: f64,
    pub cap: Option<f64>,
    pub seed: u64,
    pub max_epochs: f64,
    pub target: Option<f64>,
    pub trace_every: u64,
    pub points: usize,
    pub mode: Mode,
    pub out: Option<PathBuf>,
}

fn field<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| CliError::Validation(format!("invalid value `{v}` for {key}"))))
        .transpose()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// `1,2,8`, `1..20` (inclusive) or a mix such as `1..4,10`.
pub fn parse_taus(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Validation(format!("cannot parse tau list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let synth_n: Option<usize> = field(map, "synth-n")?;
        let source = match (map.get("data"), synth_n) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation("give either --data or --synth-n, not both".into()));
            }
            (None, None) => return Err(CliError::Validation("no data source: pass --data or --synth-n".into())),
            (Some(path), None) => DataSource::File {
                path: PathBuf::from(path),
                dim: field(map, "dim")?,
                normalize: match map.get("normalize") {
                    Some(v) => parse_bool(v)
                        .ok_or_else(|| CliError::Validation(format!("invalid value `{v}` for normalize")))?,
                    None => false,
                },
            },
            (None, Some(n)) => {
                let d = field(map, "synth-d")?.unwrap_or(10);
                let mut spec = SynthSpec::new(n, d, field(map, "synth-seed")?.unwrap_or(0));
                spec.noise = field(map, "synth-noise")?.unwrap_or(0.0);
                spec.signal = field(map, "synth-signal")?.unwrap_or(1.0);
                DataSource::Synthetic(spec)
            }
        };

        let objective: ObjectiveKind = field(map, "objective")?.unwrap_or(ObjectiveKind::Ridge);
        let mut partition_opts = PartitionOptions { shuffle_seed: field(map, "partition-seed")?, ..Default::default() };
        match map.get("q").map(String::as_str) {
            None => {}
            Some("uniform") => partition_opts.uniform_probs = true,
            Some(list) => {
                let q: Result<Vec<f64>, _> = list.split(',').map(|v| v.trim().parse::<f64>()).collect();
                partition_opts.probs =
                    Some(q.map_err(|_| CliError::Validation(format!("cannot parse block probabilities `{list}`")))?);
            }
        }
        let partitions = match map.get("partitions") {
            Some(s) => PartitionSpec::parse(s)?,
            None => PartitionSpec::Uniform(1),
        };
        let sampling: SamplingVariant = field(map, "sampling")?.unwrap_or(SamplingVariant::Nice);
        let mode = match map.get("mode") {
            Some(m) => Mode::from_str(m, true).map_err(|_| CliError::Validation(format!("unknown mode `{m}`")))?,
            None => Mode::Adaptive,
        };
        let taus = map.get("taus").map(|s| parse_taus(s)).transpose()?;

        let cfg = ExperimentConfig {
            source,
            objective,
            lambda: field(map, "lambda")?.unwrap_or(0.1),
            partitions,
            partition_opts,
            sampling,
            tau: field(map, "tau")?,
            taus,
            eps: field(map, "eps")?.unwrap_or(1e-3),
            cap: field(map, "cap")?,
            seed: field(map, "seed")?.unwrap_or(0),
            max_epochs: field(map, "max-epochs")?.unwrap_or(1000.0),
            target: field(map, "target")?,
            trace_every: field(map, "trace-every")?.unwrap_or(1),
            points: field(map, "points")?.unwrap_or(5),
            mode,
            out: map.get("out").map(PathBuf::from),
        };
        if !(cfg.eps > 0.0) {
            return Err(CliError::Validation(format!("eps must be positive, got {}", cfg.eps)));
        }
        if !(cfg.max_epochs > 0.0) {
            return Err(CliError::Validation(format!("max-epochs must be positive, got {}", cfg.max_epochs)));
        }
        if cfg.cap.is_some_and(|c| !(c > 0.0)) {
            return Err(CliError::Validation("cap must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn from_args(args: &ExperimentArgs) -> Result<Self, CliError> {
        Self::from_map(&args.merged()?)
    }

    pub fn load_dataset(&self) -> Result<Dataset, CliError> {
        Ok(match &self.source {
            DataSource::File { path, dim, normalize } => {
                let data = dataset::read_libsvm(path, *dim)?;
                if *normalize {
                    data.normalize_rows()
                } else {
                    data
                }
            }
            DataSource::Synthetic(spec) => {
                let mut spec = spec.clone();
                spec.binary = self.objective == ObjectiveKind::Logistic;
                synthetic::generate(&spec)?.into_dataset()
            }
        })
    }

    /// Dataset, objective, partitioning, constants and a reference solution.
    pub fn instance(&self) -> Result<Instance, CliError> {
        let data = Arc::new(self.load_dataset()?);
        let n = data.n();
        let obj = Arc::new(Objective::new(self.objective, self.lambda, data)?);
        let part = Arc::new(make_partitioning(n, &self.partitions, &self.partition_opts)?);
        Ok(Instance::new(obj, part, 1e-10)?)
    }

    pub fn family(&self, inst: &Instance) -> Result<SamplingFamily, CliError> {
        Ok(SamplingFamily::new(self.sampling, inst.partitioning.clone())?)
    }

    pub fn run_config(&self) -> RunConfig {
        let mut rc = RunConfig::new(self.eps, self.seed);
        rc.cap = self.cap;
        rc.max_epochs = self.max_epochs;
        rc.target_rel_error = self.target;
        rc.trace_every = self.trace_every.max(1);
        rc
    }

    fn tau_list(&self, family: &SamplingFamily) -> Result<Vec<usize>, CliError> {
        let max = family.max_tau();
        match &self.taus {
            None => Ok((1..=max).collect()),
            Some(list) => {
                if let Some(bad) = list.iter().find(|&&t| t > max) {
                    return Err(CliError::Validation(format!("tau={bad} is infeasible: largest batch is {max}")));
                }
                Ok(list.clone())
            }
        }
    }
}

/// Writes `text` to `out` if given, else to `stdout`.
fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub const ESTIMATE_HEADER: &str = "tau,L,sigma,tau_L,noise_term,T";

/// The `estimate` table as CSV; the last line is a `#` footer naming tau*.
pub fn estimate_table(cfg: &ExperimentConfig, inst: &Instance) -> Result<String, CliError> {
    let family = cfg.family(inst)?;
    let taus = cfg.tau_list(&family)?;
    let d0 = crate::linalg::dist_sq(&cfg.run_config().initial_point(inst.d()), &inst.x_star);
    let mut csv = String::from(ESTIMATE_HEADER);
    csv.push('\n');
    for &tau in &taus {
        let c =
            theory::total_complexity(&family.at(tau)?, &inst.profile, &inst.agg_star, cfg.eps, inst.mu(), Some(d0))?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            tau,
            csv_num(c.expected_smoothness),
            csv_num(c.noise),
            csv_num(c.smoothness_term),
            csv_num(c.noise_term),
            csv_num(c.total)
        );
    }
    let choice = inst.optimal_tau(&family, cfg.eps)?;
    let at =
        theory::total_complexity(&family.at(choice.tau)?, &inst.profile, &inst.agg_star, cfg.eps, inst.mu(), None)?;
    let _ = writeln!(
        csv,
        "# tau*={} rule={:?} tau_real={} binding={}",
        choice.tau,
        choice.rule,
        choice.tau_real.map_or("none".to_string(), |t| t.to_string()),
        if at.noise_binding() { "noise" } else { "smoothness" }
    );
    Ok(csv)
}

pub fn cmd_estimate(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let inst = cfg.instance()?;
    let table = estimate_table(cfg, &inst)?;
    emit(cfg.out.as_deref(), &table, stdout)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub variant: SamplingVariant,
    pub tau: usize,
    pub max_abs_diff: f64,
    /// Smallest `2 L(tau) (f(x) - f(x*)) - E||grad f_v(x) - grad f_v(x*)||^2` seen.
    pub min_smoothness_slack: f64,
    pub pass: bool,
}

/// Formula-versus-enumeration checks for every variant and feasible tau, at
/// `x*` and `points` standard-normal points.
pub fn verify_rows(
    inst: &Instance,
    points: usize,
    seed: u64,
    formula: NoiseFormula<'_>,
) -> Result<Vec<VerifyRow>, CliError> {
    let n = inst.n();
    let single = Arc::new(Partitioning::single(n));
    let configured = inst.partitioning.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = vec![inst.x_star.clone()];
    for _ in 0..points {
        xs.push((0..inst.d()).map(|_| StandardNormal.sample(&mut rng)).collect());
    }

    let mut rows = Vec::new();
    for variant in SamplingVariant::ALL {
        let part = if variant.is_partitioned() { configured.clone() } else { single.clone() };
        let profile = if Arc::ptr_eq(&part, &inst.partitioning) {
            inst.profile.clone()
        } else {
            inst.objective.smoothness_profile(&part)?
        };
        let family = match SamplingFamily::new(variant, part) {
            Ok(f) => f,
            // a nice variant on a partition with singleton blocks has no formula
            Err(crate::sampling::SamplingError::SingletonBlock { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        for tau in 1..=family.max_tau() {
            let s = family.at(tau)?;
            if s.support_size() > ENUMERATION_LIMIT {
                return Err(CliError::Validation(format!(
                    "{variant} sampling with tau={tau} has {} outcomes, above the enumeration limit; use a smaller n",
                    s.support_size()
                )));
            }
            let mut row =
                VerifyRow { variant, tau, max_abs_diff: 0.0, min_smoothness_slack: f64::INFINITY, pass: true };
            for x in &xs {
                let r = theory::verify_noise_formula_with(&s, &inst.objective, &profile, x, &inst.x_star, formula)?;
                row.max_abs_diff = row.max_abs_diff.max(r.abs_diff);
                row.min_smoothness_slack = row.min_smoothness_slack.min(r.smoothness_rhs - r.smoothness_lhs);
                row.pass &= r.noise_ok(1e-9) && r.smoothness_ok(1e-9);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn verify_report(rows: &[VerifyRow]) -> String {
    let mut out = String::from("variant,tau,max_abs_diff,min_smoothness_slack,status\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{}",
            r.variant,
            r.tau,
            r.max_abs_diff,
            r.min_smoothness_slack,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
    let _ = writeln!(out, "# checks={} failed={} max_abs_diff={:e}", rows.len(), failed, worst);
    out
}

pub fn cmd_verify(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let inst = cfg.instance()?;
    let rows = verify_rows(&inst, cfg.points, cfg.seed, &theory::gradient_noise)?;
    emit(cfg.out.as_deref(), &verify_report(&rows), stdout)?;
    match rows.iter().filter(|r| !r.pass).count() {
        0 => Ok(()),
        failures => Err(CliError::VerificationFailed { failures }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub sampling: SamplingVariant,
    pub seed: u64,
    pub eps: f64,
    pub target_rel_error: f64,
    /// Batch size of a fixed run.
    pub tau: Option<usize>,
    pub tau_star: usize,
    pub epochs_to_target: Option<f64>,
    pub epochs: f64,
    pub iterations: u64,
    pub final_rel_error: f64,
    /// Percent of grid entries that reached the target in fewer epochs than the adaptive run.
    pub grid_percentile: Option<f64>,
}

fn summarize(cfg: &ExperimentConfig, mode: Mode, tau: Option<usize>, tau_star: usize, r: &RunResult) -> RunSummary {
    RunSummary {
        mode,
        sampling: cfg.sampling,
        seed: cfg.seed,
        eps: cfg.eps,
        target_rel_error: cfg.run_config().target(),
        tau,
        tau_star,
        epochs_to_target: r.epochs_to_target,
        epochs: r.epochs,
        iterations: r.iterations,
        final_rel_error: r.final_rel_error,
        grid_percentile: None,
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<Option<PathBuf>, CliError> {
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
    }
    Ok(cfg.out.clone())
}

fn write_trace(dir: Option<&Path>, name: &str, trace: &[optimizer::TraceRecord]) -> Result<(), CliError> {
    if let Some(dir) = dir {
        std::fs::write(dir.join(name), optimizer::trace_to_csv(trace))?;
    }
    Ok(())
}

fn finish(dir: Option<&Path>, summary: &RunSummary, stdout: &mut dyn Write) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(summary).expect("serializable") + "\n";
    match dir {
        Some(d) => std::fs::write(d.join("summary.json"), json)?,
        None => stdout.write_all(json.as_bytes())?,
    }
    Ok(())
}

/// Runs `f`, writing whatever trace a divergence left behind before failing.
fn traced(
    dir: Option<&Path>,
    name: &str,
    f: impl FnOnce() -> Result<RunResult, RunError>,
) -> Result<RunResult, CliError> {
    match f() {
        Ok(r) => {
            write_trace(dir, name, &r.trace)?;
            Ok(r)
        }
        Err(RunError::Diverged { iter, trace }) => {
            write_trace(dir, name, &trace)?;
            Err(CliError::Diverged { iter })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_run(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    if cfg.mode == Mode::Grid {
        return cmd_grid(cfg, stdout);
    }
    let inst = cfg.instance()?;
    let family = cfg.family(&inst)?;
    let tau_star = inst.optimal_tau(&family, cfg.eps)?.tau;
    let dir = out_dir(cfg)?;
    let rc = cfg.run_config();
    let (r, tau) = match cfg.mode {
        Mode::Fixed => {
            let tau = cfg.tau.ok_or_else(|| CliError::Validation("--mode fixed needs --tau".into()))?;
            let s = family.at(tau)?;
            (traced(dir.as_deref(), "trace.csv", || optimizer::run_fixed(&inst, &s, &rc))?, Some(tau))
        }
        _ => (traced(dir.as_deref(), "trace.csv", || optimizer::run_adaptive(&inst, &family, &rc))?, None),
    };
    finish(dir.as_deref(), &summarize(cfg, cfg.mode, tau, tau_star, &r), stdout)
}

pub const GRID_HEADER: &str = "tau,epochs,reached,iterations";

pub fn grid_to_csv(grid: &[GridEntry]) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for e in grid {
        let _ = writeln!(out, "{},{},{},{}", e.tau, csv_num(e.epochs), e.reached, e.iterations);
    }
    out
}

pub fn cmd_grid(cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let inst = cfg.instance()?;
    let family = cfg.family(&inst)?;
    let taus = cfg.tau_list(&family)?;
    let tau_star = inst.optimal_tau(&family, cfg.eps)?.tau;
    let dir = out_dir(cfg)?;
    let rc = cfg.run_config();

    let grid = optimizer::grid_search(&inst, &family, &taus, &rc)?;
    if let Some(d) = &dir {
        std::fs::write(d.join("grid.csv"), grid_to_csv(&grid))?;
    }
    let r = traced(dir.as_deref(), "trace.csv", || optimizer::run_adaptive(&inst, &family, &rc))?;
    let mut summary = summarize(cfg, Mode::Grid, None, tau_star, &r);
    summary.grid_percentile = Some(optimizer::grid_percentile(&grid, r.epochs_to_target.unwrap_or(f64::INFINITY)));
    finish(dir.as_deref(), &summary, stdout)
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Label noise standard deviation; 0 makes every component fit exactly.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Scale of the planted model.
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    /// Keep raw Gaussian rows instead of unit-norm rows.
    #[arg(long)]
    pub raw: bool,
    /// Emit +-1 labels.
    #[arg(long)]
    pub binary: bool,
    /// LIBSVM output path; the generating model goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.n == 0 || args.d == 0 {
        return Err(CliError::Validation("n and d must be positive".into()));
    }
    let spec = SynthSpec::new(args.n, args.d, args.seed)
        .noise(args.noise)
        .signal(args.signal)
        .normalize(!args.raw)
        .binary(args.binary);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    synthetic::generate(&spec)?.write(&args.out)?;
    Ok(())
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(&ExperimentConfig::from_args(a)?, stdout),
        Command::Verify(a) => cmd_verify(&ExperimentConfig::from_args(a)?, stdout),
        Command::Run(a) => cmd_run(&ExperimentConfig::from_args(a)?, stdout),
        Command::Grid(a) => cmd_grid(&ExperimentConfig::from_args(a)?, stdout),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Entry point for the binary: runs the command and maps errors to exit codes.
pub fn main_with(cli: Cli) -> ExitCode {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
