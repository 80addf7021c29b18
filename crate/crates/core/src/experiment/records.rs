use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::calibrators::Method;
use crate::metrics::MetricsReport;
use crate::stats_tests::{wilcoxon_signed_rank, WilcoxonMode};
use crate::synthetic::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Precision,
    Recall,
    Fpr,
    TprAtFpr,
    Ece,
    Brier,
    Nll,
    Threshold,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Precision,
        Metric::Recall,
        Metric::Fpr,
        Metric::TprAtFpr,
        Metric::Ece,
        Metric::Brier,
        Metric::Nll,
        Metric::Threshold,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Fpr => "fpr",
            Metric::TprAtFpr => "tpr_at_fpr",
            Metric::Ece => "ece",
            Metric::Brier => "brier",
            Metric::Nll => "nll",
            Metric::Threshold => "threshold",
        }
    }

    /// `Some(true)` if larger is better, `None` if the metric has no preferred direction.
    pub fn higher_is_better(&self) -> Option<bool> {
        match self {
            Metric::Precision | Metric::Recall | Metric::TprAtFpr => Some(true),
            Metric::Fpr | Metric::Ece | Metric::Brier | Metric::Nll => Some(false),
            Metric::Threshold => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown metric `{s}`")))
    }
}

/// Test-set metrics of one calibration method on one bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub variant: Variant,
    pub method: Method,
    pub bootstrap: u32,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub tpr_at_fpr: Option<f64>,
    pub ece: Option<f64>,
    pub brier: Option<f64>,
    pub nll: Option<f64>,
    pub threshold: Option<f64>,
}

impl Record {
    pub fn from_report(variant: Variant, method: Method, bootstrap: u32, r: &MetricsReport) -> Self {
        Self {
            variant,
            method,
            bootstrap,
            precision: r.precision,
            recall: r.recall,
            fpr: r.fpr,
            tpr_at_fpr: r.tpr_at_fpr,
            ece: Some(r.ece),
            brier: Some(r.brier),
            nll: Some(r.nll),
            threshold: Some(r.threshold),
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::Fpr => self.fpr,
            Metric::TprAtFpr => self.tpr_at_fpr,
            Metric::Ece => self.ece,
            Metric::Brier => self.brier,
            Metric::Nll => self.nll,
            Metric::Threshold => self.threshold,
        }
    }
}

/// A (variant, method, bootstrap) with no record, `method = None` meaning all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub variant: Variant,
    pub method: Option<Method>,
    pub bootstrap: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: Variant,
    pub method: Method,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub variant: Variant,
    pub method: Method,
    pub metric: Metric,
    /// Two-sided, versus the identity method.
    pub p_value: f64,
    pub w_statistic: f64,
    pub n_effective: usize,
    pub mode: WilcoxonMode,
}

/// Mean and sample standard deviation (`n − 1` denominator).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

/// Distinct (variant, method) cells in first-appearance order.
fn cells(records: &[Record]) -> Vec<(Variant, Method)> {
    let mut out: Vec<(Variant, Method)> = Vec::new();
    for r in records {
        if !out.contains(&(r.variant, r.method)) {
            out.push((r.variant, r.method));
        }
    }
    out
}

/// One aggregate per (variant, method, metric) with at least one defined value.
pub fn aggregate(records: &[Record]) -> Result<Vec<Aggregate>, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyCell);
    }
    let mut out = Vec::new();
    for (variant, method) in cells(records) {
        for metric in Metric::ALL {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.variant == variant && r.method == method)
                .filter_map(|r| r.get(metric))
                .collect();
            if let Some((mean, std)) = mean_std(&values) {
                out.push(Aggregate {
                    variant,
                    method,
                    metric,
                    mean,
                    std,
                    n: values.len(),
                });
            }
        }
    }
    Ok(out)
}

/// Wilcoxon tests of each method against identity, paired by bootstrap index.
pub fn significance(records: &[Record]) -> Vec<Significance> {
    let mut out = Vec::new();
    for (variant, method) in cells(records) {
        if method == Method::Identity {
            continue;
        }
        let find = |m: Method, b: u32| {
            records
                .iter()
                .find(|r| r.variant == variant && r.method == m && r.bootstrap == b)
        };
        for metric in Metric::ALL {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for r in records.iter().filter(|r| r.variant == variant && r.method == method) {
                let base = find(Method::Identity, r.bootstrap).and_then(|i| i.get(metric));
                if let (Some(a), Some(b)) = (r.get(metric), base) {
                    x.push(a);
                    y.push(b);
                }
            }
            if let Ok(w) = wilcoxon_signed_rank(&x, &y) {
                out.push(Significance {
                    variant,
                    method,
                    metric,
                    p_value: w.p_value,
                    w_statistic: w.w_statistic,
                    n_effective: w.n_effective,
                    mode: w.mode,
                });
            }
        }
    }
    out
}

pub fn write_records<W: Write>(records: &[Record], writer: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record([
            "variant",
            "method",
            "bootstrap",
            "precision",
            "recall",
            "fpr",
            "tpr_at_fpr",
            "ece",
            "brier",
            "nll",
            "threshold",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| ExperimentError::Io {
        path: "<records>".into(),
        source: e,
    })
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<Record>, ExperimentError> {
    let mut rd = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn save_records(records: &[Record], path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<Record>, ExperimentError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_records(std::io::BufReader::new(file))
}
