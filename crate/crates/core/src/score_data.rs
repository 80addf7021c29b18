//! Labeled score sets and feature datasets, with CSV ingestion and export.
//!
//! A [`ScoreSet`] is the unit passed between calibration, thresholding and
//! evaluation. A [`FeatureDataset`] holds the raw feature rows a baseline
//! classifier is trained on. Both are immutable once constructed.

use std::fmt;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// First and last month present in the datasets this toolkit handles.
pub const FIRST_MONTH: u8 = 1;
pub const LAST_MONTH: u8 = 8;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: non-numeric value `{value}` in column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label `{value}` is not 0 or 1")]
    LabelOutOfRange { row: usize, value: String },
    #[error("row {row}: probability score {value} outside [0, 1]")]
    ScoreOutOfRange { row: usize, value: f64 },
    #[error("row {row}: weight {value} is negative or non-finite")]
    InvalidWeight { row: usize, value: f64 },
    #[error("row {row}: month {value} outside {FIRST_MONTH}..={LAST_MONTH}")]
    MonthOutOfRange { row: usize, value: i64 },
    #[error("row {row}: expected {expected} features, found {found}")]
    FeatureDimension {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("field `{field}` has length {found}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("score set is empty")]
    Empty,
    #[error("month ranges {train:?} and {test:?} overlap")]
    OverlappingRanges {
        train: RangeInclusive<u8>,
        test: RangeInclusive<u8>,
    },
    #[error("dataset has no month column")]
    NoMonths,
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

/// Whether scores are probabilities in `[0, 1]` or unbounded margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSpace {
    #[default]
    Probability,
    Margin,
}

impl fmt::Display for ScoreSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreSpace::Probability => "probability",
            ScoreSpace::Margin => "margin",
        })
    }
}

impl FromStr for ScoreSpace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "probability" => Ok(ScoreSpace::Probability),
            "margin" => Ok(ScoreSpace::Margin),
            other => Err(format!("unknown score space `{other}`")),
        }
    }
}

/// Parallel arrays of model scores and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    scores: Vec<f64>,
    labels: Vec<bool>,
    weights: Option<Vec<f64>>,
    group: Option<Vec<String>>,
    month: Option<Vec<u8>>,
    score_space: ScoreSpace,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>, score_space: ScoreSpace) -> Result<Self> {
        if scores.is_empty() {
            return Err(DataError::Empty);
        }
        check_len("labels", scores.len(), labels.len())?;
        for (row, &s) in scores.iter().enumerate() {
            check_score(row, s, score_space)?;
        }
        Ok(Self {
            scores,
            labels,
            weights: None,
            group: None,
            month: None,
            score_space,
        })
    }

    /// Builds a score set from `0`/`1` labels.
    pub fn from_binary(scores: Vec<f64>, labels: &[u8], score_space: ScoreSpace) -> Result<Self> {
        let labels = labels
            .iter()
            .enumerate()
            .map(|(row, &l)| match l {
                0 => Ok(false),
                1 => Ok(true),
                v => Err(DataError::LabelOutOfRange {
                    row,
                    value: v.to_string(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(scores, labels, score_space)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        check_len("weights", self.len(), weights.len())?;
        for (row, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(DataError::InvalidWeight { row, value: w });
            }
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_group(mut self, group: Vec<String>) -> Result<Self> {
        check_len("group", self.len(), group.len())?;
        self.group = Some(group);
        Ok(self)
    }

    pub fn with_months(mut self, month: Vec<u8>) -> Result<Self> {
        check_len("month", self.len(), month.len())?;
        for (row, &m) in month.iter().enumerate() {
            check_month(row, m as i64)?;
        }
        self.month = Some(month);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Weight of row `i`, 1.0 when the set carries no weights.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn group(&self) -> Option<&[String]> {
        self.group.as_deref()
    }

    pub fn month(&self) -> Option<&[u8]> {
        self.month.as_deref()
    }

    pub fn score_space(&self) -> ScoreSpace {
        self.score_space
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn n_negative(&self) -> usize {
        self.len() - self.n_positive()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.n_positive();
        pos > 0 && pos < self.len()
    }

    /// Same rows and tags with replacement scores.
    pub fn with_scores(&self, scores: Vec<f64>, score_space: ScoreSpace) -> Result<Self> {
        check_len("scores", self.len(), scores.len())?;
        for (row, &s) in scores.iter().enumerate() {
            check_score(row, s, score_space)?;
        }
        Ok(Self {
            scores,
            labels: self.labels.clone(),
            weights: self.weights.clone(),
            group: self.group.clone(),
            month: self.month.clone(),
            score_space,
        })
    }

    /// Rows at `indices`, in the given order. Returns `None` for an empty selection.
    pub fn select(&self, indices: &[usize]) -> Option<Self> {
        if indices.is_empty() {
            return None;
        }
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Some(Self {
            scores: pick(&self.scores),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            weights: self.weights.as_deref().map(pick),
            group: self
                .group
                .as_ref()
                .map(|g| indices.iter().map(|&i| g[i].clone()).collect()),
            month: self
                .month
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i]).collect()),
            score_space: self.score_space,
        })
    }
}

fn check_len(field: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(DataError::LengthMismatch {
            field,
            expected,
            found,
        });
    }
    Ok(())
}

fn check_score(row: usize, s: f64, space: ScoreSpace) -> Result<()> {
    match space {
        ScoreSpace::Probability if !(0.0..=1.0).contains(&s) => {
            Err(DataError::ScoreOutOfRange { row, value: s })
        }
        ScoreSpace::Margin if s.is_nan() => Err(DataError::NonNumeric {
            row,
            column: "score".into(),
            value: "NaN".into(),
        }),
        _ => Ok(()),
    }
}

fn check_month(row: usize, m: i64) -> Result<()> {
    if !(FIRST_MONTH as i64..=LAST_MONTH as i64).contains(&m) {
        return Err(DataError::MonthOutOfRange { row, value: m });
    }
    Ok(())
}

/// Column names used when reading a score file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub score: String,
    pub label: String,
    pub weight: Option<String>,
    pub group: Option<String>,
    pub month: Option<String>,
    pub score_space: ScoreSpace,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            score: "score".into(),
            label: "label".into(),
            weight: None,
            group: None,
            month: None,
            score_space: ScoreSpace::Probability,
        }
    }
}

impl ColumnMap {
    /// Default names, picking up `weight`, `group` and `month` columns when present.
    pub fn detect(headers: &csv::StringRecord) -> Self {
        let has = |name: &str| headers.iter().any(|h| h == name);
        let opt = |name: &str| has(name).then(|| name.to_string());
        Self {
            weight: opt("weight"),
            group: opt("group"),
            month: opt("month"),
            ..Self::default()
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DataError::MissingColumn(name.to_string()))
}

fn parse_f64(row: usize, column: &str, raw: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| DataError::NonNumeric {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

fn parse_label(row: usize, raw: &str) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(DataError::LabelOutOfRange {
            row,
            value: other.to_string(),
        }),
    }
}

fn parse_month(row: usize, column: &str, raw: &str) -> Result<u8> {
    let m: i64 = raw.trim().parse().map_err(|_| DataError::NonNumeric {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })?;
    check_month(row, m)?;
    Ok(m as u8)
}

/// Reads a score set from a CSV file with a header row.
pub fn load_scores(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<ScoreSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_scores(file, columns)
}

/// Reads a score set from any CSV source. Row numbers in errors are 0-based data rows.
pub fn read_scores<R: Read>(reader: R, columns: &ColumnMap) -> Result<ScoreSet> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let score_ix = header_index(&headers, &columns.score)?;
    let label_ix = header_index(&headers, &columns.label)?;
    let weight_ix = columns
        .weight
        .as_deref()
        .map(|c| header_index(&headers, c))
        .transpose()?;
    let group_ix = columns
        .group
        .as_deref()
        .map(|c| header_index(&headers, c))
        .transpose()?;
    let month_ix = columns
        .month
        .as_deref()
        .map(|c| header_index(&headers, c))
        .transpose()?;

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut weights = weight_ix.map(|_| Vec::new());
    let mut group = group_ix.map(|_| Vec::new());
    let mut month = month_ix.map(|_| Vec::new());

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |ix: usize| record.get(ix).unwrap_or("");
        let s = parse_f64(row, &columns.score, field(score_ix))?;
        check_score(row, s, columns.score_space)?;
        scores.push(s);
        labels.push(parse_label(row, field(label_ix))?);
        if let (Some(ix), Some(w)) = (weight_ix, weights.as_mut()) {
            let v = parse_f64(row, columns.weight.as_deref().unwrap_or(""), field(ix))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(DataError::InvalidWeight { row, value: v });
            }
            w.push(v);
        }
        if let (Some(ix), Some(g)) = (group_ix, group.as_mut()) {
            g.push(field(ix).to_string());
        }
        if let (Some(ix), Some(m)) = (month_ix, month.as_mut()) {
            m.push(parse_month(row, columns.month.as_deref().unwrap_or(""), field(ix))?);
        }
    }

    let mut set = ScoreSet::new(scores, labels, columns.score_space)?;
    set.weights = weights;
    set.group = group;
    set.month = month;
    Ok(set)
}

/// Writes `score,label[,weight][,group][,month]` with shortest round-trip floats.
pub fn write_scores<W: Write>(set: &ScoreSet, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["score", "label"];
    if set.weights.is_some() {
        header.push("weight");
    }
    if set.group.is_some() {
        header.push("group");
    }
    if set.month.is_some() {
        header.push("month");
    }
    wtr.write_record(&header)?;
    for i in 0..set.len() {
        let mut rec = vec![
            set.scores[i].to_string(),
            if set.labels[i] { "1" } else { "0" }.to_string(),
        ];
        if let Some(w) = &set.weights {
            rec.push(w[i].to_string());
        }
        if let Some(g) = &set.group {
            rec.push(g[i].clone());
        }
        if let Some(m) = &set.month {
            rec.push(m[i].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| DataError::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn save_scores(set: &ScoreSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_scores(set, std::io::BufWriter::new(file))
}

/// Labeled feature rows with group and month tags, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<bool>,
    group: Vec<String>,
    month: Vec<u8>,
}

impl FeatureDataset {
    pub fn new(
        dim: usize,
        features: Vec<f64>,
        labels: Vec<bool>,
        group: Vec<String>,
        month: Vec<u8>,
    ) -> Result<Self> {
        let n = labels.len();
        check_len("features", n * dim, features.len())?;
        check_len("group", n, group.len())?;
        check_len("month", n, month.len())?;
        for (row, &m) in month.iter().enumerate() {
            check_month(row, m as i64)?;
        }
        Ok(Self {
            dim,
            features,
            labels,
            group,
            month,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim.max(1)).take(self.len())
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn group(&self) -> &[String] {
        &self.group
    }

    pub fn month(&self) -> &[u8] {
        &self.month
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    /// Rows at `indices` (duplicates allowed), in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            group: indices.iter().map(|&i| self.group[i].clone()).collect(),
            month: indices.iter().map(|&i| self.month[i]).collect(),
        }
    }
}

/// Columns `f0..f{d-1},label,group,month`.
pub fn write_features<W: Write>(data: &FeatureDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.dim).map(|j| format!("f{j}")).collect();
    header.extend(["label", "group", "month"].map(String::from));
    wtr.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(if data.labels[i] { "1" } else { "0" }.into());
        rec.push(data.group[i].clone());
        rec.push(data.month[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| DataError::Io {
        path: "<writer>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn save_features(data: &FeatureDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_features(data, std::io::BufWriter::new(file))
}

pub fn read_features<R: Read>(reader: R) -> Result<FeatureDataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_ix = header_index(&headers, "label")?;
    let group_ix = header_index(&headers, "group")?;
    let month_ix = header_index(&headers, "month")?;
    let feature_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            h.strip_prefix('f')
                .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        })
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let dim = feature_cols.len();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut group = Vec::new();
    let mut month = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(DataError::FeatureDimension {
                row,
                expected: dim,
                found: record.len().saturating_sub(headers.len() - dim),
            });
        }
        for (ix, name) in &feature_cols {
            features.push(parse_f64(row, name, &record[*ix])?);
        }
        labels.push(parse_label(row, &record[label_ix])?);
        group.push(record[group_ix].to_string());
        month.push(parse_month(row, "month", &record[month_ix])?);
    }
    FeatureDataset::new(dim, features, labels, group, month)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_features(file)
}

/// Anything carrying a month tag per row.
pub trait MonthTagged: Sized {
    fn months(&self) -> Option<&[u8]>;
    fn subset(&self, indices: &[usize]) -> Option<Self>;

    /// Partitions rows into `(train, test)` by month, preserving row order.
    /// A side with no matching rows is `None`.
    fn split_by_month(
        &self,
        train: RangeInclusive<u8>,
        test: RangeInclusive<u8>,
    ) -> Result<(Option<Self>, Option<Self>)> {
        let months = self.months().ok_or(DataError::NoMonths)?;
        let (train_ix, test_ix) = month_partition(months, &train, &test)?;
        Ok((self.subset(&train_ix), self.subset(&test_ix)))
    }
}

impl MonthTagged for ScoreSet {
    fn months(&self) -> Option<&[u8]> {
        self.month()
    }

    fn subset(&self, indices: &[usize]) -> Option<Self> {
        self.select(indices)
    }
}

impl MonthTagged for FeatureDataset {
    fn months(&self) -> Option<&[u8]> {
        Some(self.month())
    }

    fn subset(&self, indices: &[usize]) -> Option<Self> {
        (!indices.is_empty()).then(|| self.select(indices))
    }
}

/// Row indices falling into each month range.
pub fn month_partition(
    months: &[u8],
    train: &RangeInclusive<u8>,
    test: &RangeInclusive<u8>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let overlap = !train.is_empty()
        && !test.is_empty()
        && train.start() <= test.end()
        && test.start() <= train.end();
    if overlap {
        return Err(DataError::OverlappingRanges {
            train: train.clone(),
            test: test.clone(),
        });
    }
    let mut tr = Vec::new();
    let mut te = Vec::new();
    for (i, m) in months.iter().enumerate() {
        if train.contains(m) {
            tr.push(i);
        } else if test.contains(m) {
            te.push(i);
        }
    }
    Ok((tr, te))
}
