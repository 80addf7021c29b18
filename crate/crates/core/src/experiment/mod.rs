//! Bootstrap protocol: retrain on resampled training rows, recalibrate on a
//! fixed validation set, and score the test months at a threshold frozen on
//! the first bootstrap.

mod config;
mod records;

use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    Aggregation, ExperimentConfig, SplitConfig, DEFAULT_N_BOOTSTRAPS, DEFAULT_N_ROWS,
    DEFAULT_TARGET_FPR, DEFAULT_TARGET_RECALL, DEFAULT_VALIDATION_FRACTION,
};
pub use records::{
    aggregate, load_records, mean_std, read_records, save_records, significance, write_records,
    Aggregate, Gap, Metric, Record, Significance,
};

use config::{STREAM_BOOTSTRAP, STREAM_SPLIT};
use crate::calibrators::{Calibrator, FitOptions, Method};
use crate::decision_policy::{select_threshold, PolicySource, ThresholdPolicy};
use crate::metrics::evaluate;
use crate::score_data::{load_features, month_partition, DataError, FeatureDataset, ScoreSet};
use crate::seeds::{derive_seed, stream};
use crate::synthetic::{generate, train_baseline, SyntheticError, Variant};

pub const RESULT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error("no records to aggregate")]
    EmptyCell,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("records file: {0}")]
    Csv(#[from] csv::Error),
    #[error("result document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Row indices of one variant's dataset assigned to each protocol role.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSplit {
    pub validation: Vec<usize>,
    /// Training-month rows outside the validation set; bootstraps draw from here.
    pub pool: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions rows by month, then draws the validation subset once from the training months.
pub fn split_variant(
    data: &FeatureDataset,
    cfg: &ExperimentConfig,
    variant_seed: u64,
) -> Result<VariantSplit, ExperimentError> {
    let (mut train, test) =
        month_partition(data.month(), &cfg.split.train_range(), &cfg.split.test_range())?;
    if train.len() < 2 || test.is_empty() {
        return Err(ExperimentError::Config(format!(
            "split leaves {} training and {} test rows",
            train.len(),
            test.len()
        )));
    }
    let mut rng = stream(variant_seed, &[STREAM_SPLIT]);
    train.shuffle(&mut rng);
    let n_val = ((train.len() as f64 * cfg.split.validation_fraction).round() as usize)
        .clamp(1, train.len() - 1);
    let mut validation = train[..n_val].to_vec();
    let mut pool = train[n_val..].to_vec();
    validation.sort_unstable();
    pool.sort_unstable();
    Ok(VariantSplit {
        validation,
        pool,
        test,
    })
}

/// Resample of `pool` with replacement, same size, from the stream of bootstrap `b`.
pub fn bootstrap_indices(pool: &[usize], variant_seed: u64, b: u32) -> Vec<usize> {
    let mut rng = stream(variant_seed, &[STREAM_BOOTSTRAP, b as u64]);
    (0..pool.len())
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenThreshold {
    pub variant: Variant,
    pub method: Method,
    pub policy: ThresholdPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    /// Sorted by (variant, method) in config order, then bootstrap.
    pub records: Vec<Record>,
    pub gaps: Vec<Gap>,
    pub thresholds: Vec<FrozenThreshold>,
    pub aggregates: Vec<Aggregate>,
    pub significance: Vec<Significance>,
}

impl ExperimentResult {
    /// Aggregates and tests as a JSON document; records live in their own CSV.
    pub fn summary_json(&self) -> Result<String, ExperimentError> {
        #[derive(Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            dispersion: &'static str,
            test: &'static str,
            config: &'a ExperimentConfig,
            thresholds: &'a [FrozenThreshold],
            gaps: &'a [Gap],
            aggregates: &'a [Aggregate],
            significance: &'a [Significance],
        }
        let doc = Summary {
            schema_version: self.schema_version,
            dispersion: "sample standard deviation (n-1)",
            test: "two-sided Wilcoxon signed-rank vs identity, paired by bootstrap",
            config: &self.config,
            thresholds: &self.thresholds,
            gaps: &self.gaps,
            aggregates: &self.aggregates,
            significance: &self.significance,
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn aggregate_of(&self, variant: Variant, method: Method, metric: Metric) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.variant == variant && a.method == method && a.metric == metric)
    }

    pub fn records_of(&self, variant: Variant, method: Method) -> impl Iterator<Item = &Record> {
        self.records
            .iter()
            .filter(move |r| r.variant == variant && r.method == method)
    }
}

/// Runs the protocol on one thread.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    run_with_jobs(cfg, 1)
}

/// Runs the protocol with at most `jobs` bootstraps in flight; the result does not depend on `jobs`.
pub fn run_with_jobs(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;

    let mut records = Vec::new();
    let mut gaps = Vec::new();
    let mut thresholds = Vec::new();
    for &variant in &cfg.variants {
        let out = pool.install(|| run_variant(cfg, variant))?;
        records.extend(out.records);
        gaps.extend(out.gaps);
        thresholds.extend(out.thresholds);
    }
    let aggregates = if records.is_empty() {
        Vec::new()
    } else {
        aggregate(&records)?
    };
    let significance = significance(&records);
    Ok(ExperimentResult {
        schema_version: RESULT_SCHEMA_VERSION,
        config: cfg.clone(),
        records,
        gaps,
        thresholds,
        aggregates,
        significance,
    })
}

struct VariantOutcome {
    records: Vec<Record>,
    gaps: Vec<Gap>,
    thresholds: Vec<FrozenThreshold>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    variant: Variant,
    seed: u64,
    data: FeatureDataset,
    split: VariantSplit,
    validation: FeatureDataset,
    test: FeatureDataset,
}

/// Calibrated (validation, test) scores per method, or why the method failed.
type Fitted = Vec<(Method, Result<(ScoreSet, ScoreSet), String>)>;

/// Records and gaps of one bootstrap.
type Evaluated = (Vec<Record>, Vec<Gap>);

impl Context<'_> {
    fn fit_bootstrap(&self, b: u32) -> Result<Fitted, String> {
        let sample = bootstrap_indices(&self.split.pool, self.seed, b);
        let train = self.data.select(&sample);
        let model = train_baseline(&train, self.cfg.classifier).map_err(|e| e.to_string())?;
        let val = model.score(&self.validation).map_err(|e| e.to_string())?;
        let test = model.score(&self.test).map_err(|e| e.to_string())?;
        let opts = FitOptions {
            platt_smoothing: self.cfg.platt_smoothing,
        };
        Ok(self
            .cfg
            .methods
            .iter()
            .map(|&m| {
                let fitted = Calibrator::fit(m, &val, opts)
                    .and_then(|c| Ok((c.apply_set(&val)?, c.apply_set(&test)?)))
                    .map_err(|e| e.to_string());
                (m, fitted)
            })
            .collect())
    }

    fn gap(&self, method: Option<Method>, b: u32, reason: String) -> Gap {
        warn!(
            "variant {} bootstrap {b} method {}: skipped ({reason})",
            self.variant,
            method.map_or("*", |m| m.as_str())
        );
        Gap {
            variant: self.variant,
            method,
            bootstrap: b,
            reason,
        }
    }

    /// Records and gaps of bootstrap `b` given the thresholds frozen so far.
    fn evaluate_bootstrap(
        &self,
        b: u32,
        fitted: &Result<Fitted, String>,
        frozen: &BTreeMap<Method, ThresholdPolicy>,
    ) -> Evaluated {
        let fitted = match fitted {
            Ok(f) => f,
            Err(reason) => return (Vec::new(), vec![self.gap(None, b, reason.clone())]),
        };
        let mut recs = Vec::new();
        let mut gaps = Vec::new();
        for (method, scores) in fitted {
            let Some(policy) = frozen.get(method) else {
                gaps.push(self.gap(Some(*method), b, "no frozen threshold yet".into()));
                continue;
            };
            let outcome = scores.as_ref().map_err(Clone::clone).and_then(|(_, test)| {
                evaluate(test, policy.threshold, self.cfg.ece_bins, self.cfg.target_fpr)
                    .map_err(|e| e.to_string())
            });
            match outcome {
                Ok(report) => recs.push(Record::from_report(self.variant, *method, b, &report)),
                Err(reason) => gaps.push(self.gap(Some(*method), b, reason)),
            }
        }
        (recs, gaps)
    }
}

fn load_variant_data(cfg: &ExperimentConfig, variant: Variant) -> Result<FeatureDataset, ExperimentError> {
    match cfg.datasets.get(&variant) {
        Some(path) => Ok(load_features(path)?),
        None => Ok(generate(&cfg.synthetic_spec(variant))?),
    }
}

fn run_variant(cfg: &ExperimentConfig, variant: Variant) -> Result<VariantOutcome, ExperimentError> {
    let seed = cfg.variant_seed(variant);
    let data = load_variant_data(cfg, variant)?;
    let split = split_variant(&data, cfg, seed)?;
    info!(
        "variant {variant}: {} pool, {} validation, {} test rows",
        split.pool.len(),
        split.validation.len(),
        split.test.len()
    );
    let ctx = Context {
        cfg,
        variant,
        seed,
        validation: data.select(&split.validation),
        test: data.select(&split.test),
        data,
        split,
    };

    // Thresholds freeze on the first bootstrap where each method fits; normally b = 0.
    let n = cfg.n_bootstraps as u32;
    let mut frozen: BTreeMap<Method, ThresholdPolicy> = BTreeMap::new();
    let mut by_b: BTreeMap<u32, Evaluated> = BTreeMap::new();
    let mut next = 0;
    while next < n && frozen.len() < cfg.methods.len() {
        let b = next;
        next += 1;
        let fitted = ctx.fit_bootstrap(b);
        if let Ok(list) = &fitted {
            for (method, scores) in list {
                if frozen.contains_key(method) {
                    continue;
                }
                let Ok((val, _)) = scores else { continue };
                let source = PolicySource {
                    bootstrap: b,
                    method: method.to_string(),
                    variant: variant.to_string(),
                };
                match select_threshold(val, cfg.target_recall, source) {
                    Ok(policy) => {
                        frozen.insert(*method, policy);
                    }
                    Err(e) => warn!("variant {variant} bootstrap {b} method {method}: {e}"),
                }
            }
        }
        by_b.insert(b, ctx.evaluate_bootstrap(b, &fitted, &frozen));
    }

    let rest: Vec<(u32, Evaluated)> = (next..n)
        .into_par_iter()
        .map(|b| (b, ctx.evaluate_bootstrap(b, &ctx.fit_bootstrap(b), &frozen)))
        .collect();
    by_b.extend(rest);

    let position = |m: Method| cfg.methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    let mut records: Vec<Record> = Vec::new();
    let mut gaps: Vec<Gap> = Vec::new();
    for (r, g) in by_b.into_values() {
        records.extend(r);
        gaps.extend(g);
    }
    records.sort_by_key(|r| (position(r.method), r.bootstrap));
    let thresholds = cfg
        .methods
        .iter()
        .filter_map(|m| {
            frozen.get(m).map(|p| FrozenThreshold {
                variant,
                method: *m,
                policy: p.clone(),
            })
        })
        .collect();
    Ok(VariantOutcome {
        records,
        gaps,
        thresholds,
    })
}

/// Writes `records.csv` and `aggregates.json` into `dir`, returning their paths.
pub fn write_result(
    result: &ExperimentResult,
    dir: impl AsRef<Path>,
) -> Result<Vec<std::path::PathBuf>, ExperimentError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let records = dir.join("records.csv");
    save_records(&result.records, &records)?;
    let summary = dir.join("aggregates.json");
    std::fs::write(&summary, result.summary_json()?).map_err(|e| ExperimentError::Io {
        path: summary.display().to_string(),
        source: e,
    })?;
    Ok(vec![records, summary])
}

/// Seed of the stream that generated `variant`'s data, for manifests.
pub fn data_seed(cfg: &ExperimentConfig, variant: Variant) -> u64 {
    derive_seed(cfg.variant_seed(variant), &[config::STREAM_DATA])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            variants: vec![Variant::Base],
            n_bootstraps: 3,
            n_rows: 4_000,
            master_seed: 5,
            classifier: crate::synthetic::TrainSettings {
                epochs: 50,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn split_roles_are_disjoint() {
        let cfg = tiny();
        let seed = cfg.variant_seed(Variant::Base);
        let data = load_variant_data(&cfg, Variant::Base).unwrap();
        let s = split_variant(&data, &cfg, seed).unwrap();
        let mut all: Vec<usize> = s.validation.iter().chain(&s.pool).chain(&s.test).copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n);
        assert!(bootstrap_indices(&s.pool, seed, 0)
            .iter()
            .all(|i| s.pool.binary_search(i).is_ok()));
    }

    #[test]
    fn thresholds_frozen_across_bootstraps() {
        let cfg = tiny();
        let res = run(&cfg).unwrap();
        assert_eq!(res.records.len(), 3 * cfg.methods.len());
        for t in &res.thresholds {
            assert_eq!(t.policy.source.bootstrap, 0);
            for r in res.records_of(t.variant, t.method) {
                assert_eq!(r.threshold, Some(t.policy.threshold));
            }
        }
    }

    #[test]
    fn jobs_do_not_change_results() {
        let cfg = tiny();
        assert_eq!(run(&cfg).unwrap(), run_with_jobs(&cfg, 3).unwrap());
    }
}
