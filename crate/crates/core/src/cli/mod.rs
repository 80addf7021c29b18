//! Command-line front end. Every file written is recorded, with its SHA-256,
//! in a manifest that `replay` can re-execute.

mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{manifest_path_for, sha256_file, FileDigest, RunManifest, MANIFEST_SCHEMA_VERSION};

use crate::calibrators::{
    load_calibrator, save_calibrator, CalibrationError, Calibrator, FitOptions, Method,
};
use crate::decision_policy::{load_policy, save_policy, select_threshold, PolicyError, PolicySource};
use crate::experiment::{
    data_seed, load_records, run_with_jobs, write_result, ExperimentConfig, ExperimentError, Metric,
};
use crate::metrics::{evaluate, MetricsError, DEFAULT_ECE_BINS};
use crate::report::{render_report, ReportFormat, ReportOptions};
use crate::score_data::{
    read_scores, save_features, ColumnMap, DataError, ScoreSet, ScoreSpace,
};
use crate::stats_tests::DEFAULT_ALPHA;
use crate::synthetic::{generate, SyntheticError, SyntheticSpec, Variant};

pub const EXIT_IO: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_SCHEMA: u8 = 5;
pub const EXIT_FIT: u8 = 6;
pub const EXIT_EXPERIMENT: u8 = 7;
pub const EXIT_REPLAY_MISMATCH: u8 = 8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid input data: {0}")]
    Data(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Data(_) => EXIT_DATA,
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Fit(_) => EXIT_FIT,
            CliError::Experiment(_) => EXIT_EXPERIMENT,
            CliError::ReplayMismatch(_) => EXIT_REPLAY_MISMATCH,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::Io { path, source } => CliError::Io { path, source },
            CalibrationError::Data(d) => d.into(),
            e @ (CalibrationError::Schema(_)
            | CalibrationError::SchemaVersion { .. }
            | CalibrationError::UnknownMethod(_)
            | CalibrationError::InvalidModel(_)) => CliError::Schema(e.to_string()),
            e @ (CalibrationError::NonFinite(_) | CalibrationError::OutOfSpace(_)) => {
                CliError::Data(e.to_string())
            }
            e => CliError::Fit(e.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Io { path, source } => CliError::Io { path, source },
            e @ (PolicyError::Schema(_) | PolicyError::SchemaVersion { .. }) => {
                CliError::Schema(e.to_string())
            }
            e @ (PolicyError::NoPositives | PolicyError::NonFiniteThreshold) => {
                CliError::Fit(e.to_string())
            }
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SyntheticError> for CliError {
    fn from(e: SyntheticError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Io { path, source } => CliError::Io { path, source },
            ExperimentError::Data(d) => d.into(),
            e @ ExperimentError::Csv(_) => CliError::Data(e.to_string()),
            e => CliError::Experiment(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "calibkit", version, about = "Calibrate classifier scores and freeze decision thresholds")]
pub struct Cli {
    /// Log verbosity: error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic feature dataset.
    Gen(GenArgs),
    /// Fit a calibrator on labeled scores.
    Fit(FitArgs),
    /// Apply a calibrator, adding a `calibrated` column.
    Apply(ApplyArgs),
    /// Choose the decision threshold reaching a target recall.
    Threshold(ThresholdArgs),
    /// Score a labeled set against a threshold policy.
    Evaluate(EvaluateArgs),
    /// Run the bootstrap recalibration experiment.
    Experiment(ExperimentArgs),
    /// Render a method × variant table from experiment records.
    Report(ReportArgs),
    /// Re-execute the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// One of base, 1..5 (or I..V).
    #[arg(long, default_value = "base")]
    pub variant: Variant,
    #[arg(long, default_value_t = 50_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON generator spec replacing the variant preset; `rows` and `seed` still apply.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fit Platt scaling on hard 0/1 targets.
    #[arg(long)]
    pub no_platt_smoothing: bool,
    #[arg(long, default_value = "probability")]
    pub score_space: ScoreSpace,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub calibrator: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub target_recall: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "probability")]
    pub score_space: ScoreSpace,
    /// Provenance: calibration method that produced the scores.
    #[arg(long, default_value = "identity")]
    pub method: String,
    /// Provenance: dataset the scores came from.
    #[arg(long, default_value = "")]
    pub variant: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
    pub ece_bins: usize,
    #[arg(long, default_value_t = 0.05)]
    pub target_fpr: f64,
    /// Calibrator applied to the scores before evaluation.
    #[arg(long)]
    pub calibrator: Option<PathBuf>,
    /// Also write the reliability bins as CSV.
    #[arg(long)]
    pub reliability: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value = "text")]
    pub format: ReportFormat,
    /// Metrics to tabulate, one grid each.
    #[arg(long = "metric", default_values_t = [Metric::Precision, Metric::Recall])]
    pub metrics: Vec<Metric>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving the regenerated outputs; defaults to a fresh temporary directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Compare regenerated outputs with the recorded hashes.
    #[arg(long)]
    pub verify: bool,
}

/// A command with every default resolved and every path absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Gen {
        variant: Variant,
        spec: SyntheticSpec,
        out: PathBuf,
    },
    Fit {
        method: Method,
        scores: PathBuf,
        score_space: ScoreSpace,
        platt_smoothing: bool,
        out: PathBuf,
    },
    Apply {
        calibrator: PathBuf,
        scores: PathBuf,
        out: PathBuf,
    },
    Threshold {
        scores: PathBuf,
        score_space: ScoreSpace,
        target_recall: f64,
        method: String,
        variant: String,
        out: PathBuf,
    },
    Evaluate {
        scores: PathBuf,
        policy: PathBuf,
        calibrator: Option<PathBuf>,
        ece_bins: usize,
        target_fpr: f64,
        out: PathBuf,
        reliability: Option<PathBuf>,
    },
    Experiment {
        config: ExperimentConfig,
        jobs: usize,
        out_dir: PathBuf,
    },
    Report {
        records: PathBuf,
        format: String,
        metrics: Vec<Metric>,
        alpha: f64,
        out: PathBuf,
    },
}

struct Executed {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seeds: BTreeMap<String, u64>,
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(path).map_err(|e| CliError::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads a score CSV, picking up optional `weight`, `group` and `month` columns.
fn load_score_file(path: &Path, space: ScoreSpace) -> Result<ScoreSet, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let headers = csv::Reader::from_reader(bytes.as_slice())
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let columns = ColumnMap {
        score_space: space,
        ..ColumnMap::detect(&headers)
    };
    Ok(read_scores(bytes.as_slice(), &columns)?)
}

impl Invocation {
    fn from_command(cmd: &Command) -> Result<Option<Self>, CliError> {
        Ok(Some(match cmd {
            Command::Gen(a) => {
                let spec = match &a.spec {
                    Some(p) => SyntheticSpec {
                        n_rows: a.rows,
                        seed: a.seed,
                        ..read_json(p)?
                    },
                    None => SyntheticSpec::for_variant(a.variant, a.rows, a.seed),
                };
                Invocation::Gen {
                    variant: a.variant,
                    spec,
                    out: absolute(&a.out)?,
                }
            }
            Command::Fit(a) => Invocation::Fit {
                method: a.method,
                scores: absolute(&a.scores)?,
                score_space: a.score_space,
                platt_smoothing: !a.no_platt_smoothing,
                out: absolute(&a.out)?,
            },
            Command::Apply(a) => Invocation::Apply {
                calibrator: absolute(&a.calibrator)?,
                scores: absolute(&a.scores)?,
                out: absolute(&a.out)?,
            },
            Command::Threshold(a) => Invocation::Threshold {
                scores: absolute(&a.scores)?,
                score_space: a.score_space,
                target_recall: a.target_recall,
                method: a.method.clone(),
                variant: a.variant.clone(),
                out: absolute(&a.out)?,
            },
            Command::Evaluate(a) => Invocation::Evaluate {
                scores: absolute(&a.scores)?,
                policy: absolute(&a.policy)?,
                calibrator: a.calibrator.as_deref().map(absolute).transpose()?,
                ece_bins: a.ece_bins,
                target_fpr: a.target_fpr,
                out: absolute(&a.out)?,
                reliability: a.reliability.as_deref().map(absolute).transpose()?,
            },
            Command::Experiment(a) => {
                let mut config: ExperimentConfig = read_json(&a.config)?;
                let base = absolute(a.config.parent().unwrap_or(Path::new(".")))?;
                for p in config.datasets.values_mut() {
                    *p = base.join(&*p);
                }
                Invocation::Experiment {
                    config,
                    jobs: a.jobs,
                    out_dir: absolute(&a.out_dir)?,
                }
            }
            Command::Report(a) => match &a.out {
                Some(out) => Invocation::Report {
                    records: absolute(&a.records)?,
                    format: a.format.to_string(),
                    metrics: a.metrics.clone(),
                    alpha: a.alpha,
                    out: absolute(out)?,
                },
                None => return Ok(None),
            },
            Command::Replay(_) => return Ok(None),
        }))
    }

    /// The same command with its outputs moved under `dir`, file names kept.
    fn relocated(&self, dir: &Path) -> Self {
        let to = |p: &PathBuf| dir.join(p.file_name().unwrap_or_default());
        let mut inv = self.clone();
        match &mut inv {
            Invocation::Gen { out, .. }
            | Invocation::Fit { out, .. }
            | Invocation::Apply { out, .. }
            | Invocation::Threshold { out, .. }
            | Invocation::Report { out, .. } => *out = to(out),
            Invocation::Evaluate {
                out, reliability, ..
            } => {
                *out = to(out);
                if let Some(r) = reliability {
                    *r = to(r);
                }
            }
            Invocation::Experiment { out_dir, .. } => *out_dir = dir.to_path_buf(),
        }
        inv
    }

    fn execute(&self) -> Result<Executed, CliError> {
        let mut seeds = BTreeMap::new();
        let (inputs, outputs) = match self {
            Invocation::Gen { spec, out, .. } => {
                seeds.insert("seed".into(), spec.seed);
                let data = generate(spec)?;
                ensure_parent(out)?;
                save_features(&data, out)?;
                (vec![], vec![out.clone()])
            }
            Invocation::Fit {
                method,
                scores,
                score_space,
                platt_smoothing,
                out,
            } => {
                let set = load_score_file(scores, *score_space)?;
                let opts = FitOptions {
                    platt_smoothing: *platt_smoothing,
                };
                let cal = Calibrator::fit(*method, &set, opts)?;
                ensure_parent(out)?;
                save_calibrator(&cal, out)?;
                (vec![scores.clone()], vec![out.clone()])
            }
            Invocation::Apply {
                calibrator,
                scores,
                out,
            } => {
                let cal = load_calibrator(calibrator)?;
                apply_to_file(&cal, scores, out)?;
                (vec![calibrator.clone(), scores.clone()], vec![out.clone()])
            }
            Invocation::Threshold {
                scores,
                score_space,
                target_recall,
                method,
                variant,
                out,
            } => {
                let set = load_score_file(scores, *score_space)?;
                let source = PolicySource {
                    bootstrap: 0,
                    method: method.clone(),
                    variant: variant.clone(),
                };
                let policy = select_threshold(&set, *target_recall, source)?;
                ensure_parent(out)?;
                save_policy(&policy, out)?;
                (vec![scores.clone()], vec![out.clone()])
            }
            Invocation::Evaluate {
                scores,
                policy,
                calibrator,
                ece_bins,
                target_fpr,
                out,
                reliability,
            } => {
                let policy_doc = load_policy(policy)?;
                let mut inputs = vec![scores.clone(), policy.clone()];
                let set = match calibrator {
                    Some(path) => {
                        let cal = load_calibrator(path)?;
                        inputs.push(path.clone());
                        cal.apply_set(&load_score_file(scores, cal.score_space())?)?
                    }
                    None => load_score_file(scores, policy_doc.score_space)?,
                };
                if set.score_space() != policy_doc.score_space {
                    return Err(CliError::Schema(format!(
                        "policy threshold is in {} space but scores are {}",
                        policy_doc.score_space,
                        set.score_space()
                    )));
                }
                let report = evaluate(&set, policy_doc.threshold, *ece_bins, *target_fpr)?;
                let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
                text.push('\n');
                write_text(out, &text)?;
                let mut outputs = vec![out.clone()];
                if let Some(path) = reliability {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for bin in &report.reliability {
                        w.serialize(bin).map_err(|e| CliError::Data(e.to_string()))?;
                    }
                    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
                    write_text(path, &String::from_utf8(bytes).expect("utf-8"))?;
                    outputs.push(path.clone());
                }
                (inputs, outputs)
            }
            Invocation::Experiment {
                config,
                jobs,
                out_dir,
            } => {
                seeds.insert("master_seed".into(), config.master_seed);
                for &v in &config.variants {
                    seeds.insert(format!("variant.{v}"), config.variant_seed(v));
                    if !config.datasets.contains_key(&v) {
                        seeds.insert(format!("data.{v}"), data_seed(config, v));
                    }
                }
                let result = run_with_jobs(config, *jobs)?;
                let mut outputs = write_result(&result, out_dir)?;
                let records = result.records.clone();
                let report_path = out_dir.join("report.txt");
                if !records.is_empty() {
                    let text = render_report(&records, &ReportOptions::default())?;
                    write_text(&report_path, &text)?;
                    outputs.push(report_path);
                }
                info!(
                    "experiment: {} records, {} gaps",
                    result.records.len(),
                    result.gaps.len()
                );
                (config.datasets.values().cloned().collect(), outputs)
            }
            Invocation::Report {
                records,
                format,
                metrics,
                alpha,
                out,
            } => {
                let text = report_text(records, format.parse()?, metrics.clone(), *alpha)?;
                write_text(out, &text)?;
                (vec![records.clone()], vec![out.clone()])
            }
        };
        Ok(Executed {
            inputs,
            outputs,
            seeds,
        })
    }

    fn manifest_path(&self) -> PathBuf {
        match self {
            Invocation::Experiment { out_dir, .. } => out_dir.join("manifest.json"),
            Invocation::Gen { out, .. }
            | Invocation::Fit { out, .. }
            | Invocation::Apply { out, .. }
            | Invocation::Threshold { out, .. }
            | Invocation::Evaluate { out, .. }
            | Invocation::Report { out, .. } => manifest_path_for(out),
        }
    }
}

fn report_text(
    records: &Path,
    format: ReportFormat,
    metrics: Vec<Metric>,
    alpha: f64,
) -> Result<String, CliError> {
    let recs = load_records(records)?;
    Ok(render_report(
        &recs,
        &ReportOptions {
            metrics,
            alpha,
            format,
        },
    )?)
}

/// Copies the score CSV, appending a `calibrated` column.
fn apply_to_file(cal: &Calibrator, scores: &Path, out: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(scores).map_err(|e| CliError::io(scores, e))?;
    let data_err = |e: csv::Error| CliError::Data(format!("{}: {e}", scores.display()));
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let headers = rdr.headers().map_err(data_err)?.clone();
    let ix = headers
        .iter()
        .position(|h| h == "score")
        .ok_or_else(|| CliError::from(DataError::MissingColumn("score".into())))?;
    if headers.iter().any(|h| h == "calibrated") {
        return Err(CliError::Data(format!(
            "{} already has a `calibrated` column",
            scores.display()
        )));
    }
    ensure_parent(out)?;
    let file = std::fs::File::create(out).map_err(|e| CliError::io(out, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let write_err = |e: csv::Error| CliError::Data(format!("{}: {e}", out.display()));
    let mut header = headers.clone();
    header.push_field("calibrated");
    w.write_record(&header).map_err(write_err)?;
    for (row, rec) in rdr.records().enumerate() {
        let mut rec = rec.map_err(data_err)?;
        let raw = rec.get(ix).unwrap_or("");
        let s: f64 = raw.trim().parse().map_err(|_| DataError::NonNumeric {
            row,
            column: "score".into(),
            value: raw.to_string(),
        })?;
        let p = cal.apply(s)?;
        rec.push_field(&p.to_string());
        w.write_record(&rec).map_err(write_err)?;
    }
    w.flush().map_err(|e| CliError::io(out, e))
}

fn execute_and_record(inv: &Invocation) -> Result<PathBuf, CliError> {
    let done = inv.execute()?;
    let manifest = RunManifest::new(inv.clone(), done.seeds, &done.inputs, &done.outputs)?;
    let path = inv.manifest_path();
    manifest.save(&path)?;
    Ok(path)
}

fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let manifest = RunManifest::load(&args.manifest)?;
    for input in &manifest.inputs {
        let now = sha256_file(&input.path)?;
        if now != input.sha256 {
            return Err(CliError::ReplayMismatch(format!(
                "input {} changed since the run",
                input.path.display()
            )));
        }
    }
    let dir = match &args.out_dir {
        Some(d) => absolute(d)?,
        None => {
            let nanos = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or(0);
            std::env::temp_dir().join(format!("calibkit-replay-{}-{nanos}", std::process::id()))
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let inv = manifest.invocation.relocated(&dir);
    let done = inv.execute()?;
    println!("replayed into {}", dir.display());
    if !args.verify {
        return Ok(());
    }
    let mut mismatches = Vec::new();
    for recorded in &manifest.outputs {
        let name = recorded.path.file_name().unwrap_or_default();
        let Some(fresh) = done.outputs.iter().find(|p| p.file_name() == Some(name)) else {
            mismatches.push(format!("{} not produced", recorded.path.display()));
            continue;
        };
        let digest = sha256_file(fresh)?;
        if digest == recorded.sha256 {
            println!("ok {}", name.to_string_lossy());
        } else {
            mismatches.push(format!("{} differs", name.to_string_lossy()));
        }
    }
    if mismatches.is_empty() {
        println!("verified {} outputs", manifest.outputs.len());
        Ok(())
    } else {
        Err(CliError::ReplayMismatch(mismatches.join("; ")))
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Replay(a) => replay(a),
        Command::Report(a) if a.out.is_none() => {
            let text = report_text(&a.records, a.format, a.metrics.clone(), a.alpha)?;
            print!("{text}");
            Ok(())
        }
        cmd => {
            let inv = Invocation::from_command(cmd)?.expect("writing command");
            let manifest = execute_and_record(&inv)?;
            info!("manifest written to {}", manifest.display());
            Ok(())
        }
    }
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .try_init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
