//! Synthetic fraud datasets with group-size, prevalence and separability
//! disparities and a per-month drift schedule.
//!
//! Rows are spread over eight months. Each row draws a group (majority or
//! minority), a fraud label from the group/month prevalence, and Gaussian
//! features whose fraud-class mean is offset by the group's separability gap
//! along a fixed loading direction plus that month's drift vector.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score_data::{FeatureDataset, FIRST_MONTH, LAST_MONTH};

pub const N_MONTHS: usize = (LAST_MONTH - FIRST_MONTH + 1) as usize;

pub const MAJORITY: &str = "majority";
pub const MINORITY: &str = "minority";

/// Share of applications per month; each in `[0.095, 0.15]`.
pub const DEFAULT_MONTH_WEIGHTS: [f64; N_MONTHS] =
    [0.150, 0.140, 0.130, 0.120, 0.115, 0.110, 0.095, 0.140];

/// Overall fraud rate per month, rising from 0.85% to 1.5%.
pub const DEFAULT_PREVALENCE: [f64; N_MONTHS] =
    [0.0085, 0.0090, 0.0095, 0.0105, 0.0115, 0.0125, 0.0140, 0.0150];

pub const DEFAULT_N_FEATURES: usize = 8;
pub const DEFAULT_SEPARABILITY: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "III")]
    III,
    #[serde(rename = "IV")]
    IV,
    #[serde(rename = "V")]
    V,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Base,
        Variant::I,
        Variant::II,
        Variant::III,
        Variant::IV,
        Variant::V,
    ];

    pub fn index(&self) -> u64 {
        Self::ALL.iter().position(|v| v == self).expect("listed") as u64
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::I => "I",
            Variant::II => "II",
            Variant::III => "III",
            Variant::IV => "IV",
            Variant::V => "V",
        }
    }

    /// Column heading used in reports.
    pub fn title(&self) -> &'static str {
        match self {
            Variant::Base => "Base",
            Variant::I => "Variant I",
            Variant::II => "Variant II",
            Variant::III => "Variant III",
            Variant::IV => "Variant IV",
            Variant::V => "Variant V",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = SyntheticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("variant").unwrap_or(&key);
        let key = key.trim_start_matches(['_', ' ', '-']);
        Ok(match key {
            "base" | "0" => Variant::Base,
            "i" | "1" => Variant::I,
            "ii" | "2" => Variant::II,
            "iii" | "3" => Variant::III,
            "iv" | "4" => Variant::IV,
            "v" | "5" => Variant::V,
            _ => return Err(SyntheticError::UnknownVariant(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPair {
    pub majority: f64,
    pub minority: f64,
}

impl GroupPair {
    pub fn both(v: f64) -> Self {
        Self {
            majority: v,
            minority: v,
        }
    }

    pub fn get(&self, minority: bool) -> f64 {
        if minority {
            self.minority
        } else {
            self.majority
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    /// Relative share of rows in each month.
    pub month_weights: Vec<f64>,
    /// Overall fraud rate in each month.
    pub prevalence: Vec<f64>,
    pub minority_fraction: f64,
    /// Minority fraud rate over majority fraud rate, in the disparity months.
    pub prevalence_ratio: f64,
    /// Months in which `prevalence_ratio` applies; elsewhere both groups share a rate.
    pub disparity_months: Vec<u8>,
    /// Distance between class means along the loading direction, per group.
    pub separability: GroupPair,
    /// Per-month shift added to the fraud-class feature mean (`months × n_features`).
    pub drift: Vec<Vec<f64>>,
    pub seed: u64,
}

fn all_months() -> Vec<u8> {
    (FIRST_MONTH..=LAST_MONTH).collect()
}

impl SyntheticSpec {
    pub fn base(n_rows: usize, seed: u64) -> Self {
        Self {
            n_rows,
            n_features: DEFAULT_N_FEATURES,
            month_weights: DEFAULT_MONTH_WEIGHTS.to_vec(),
            prevalence: DEFAULT_PREVALENCE.to_vec(),
            minority_fraction: 0.3,
            prevalence_ratio: 1.0,
            disparity_months: all_months(),
            separability: GroupPair::both(DEFAULT_SEPARABILITY),
            drift: vec![vec![0.0; DEFAULT_N_FEATURES]; N_MONTHS],
            seed,
        }
    }

    /// Preset for one of the six dataset variants.
    pub fn for_variant(variant: Variant, n_rows: usize, seed: u64) -> Self {
        let base = Self::base(n_rows, seed);
        match variant {
            Variant::Base => base,
            Variant::I => Self {
                minority_fraction: 0.1,
                ..base
            },
            Variant::II => Self {
                minority_fraction: 0.5,
                prevalence_ratio: 5.0,
                ..base
            },
            Variant::III => Self {
                separability: GroupPair {
                    majority: 3.6,
                    minority: DEFAULT_SEPARABILITY,
                },
                ..base
            },
            Variant::IV => Self {
                prevalence_ratio: 3.0,
                disparity_months: (FIRST_MONTH..=6).collect(),
                ..base
            },
            Variant::V => Self {
                minority_fraction: 0.5,
                drift: ramp_drift(DEFAULT_N_FEATURES, &[1.0, 0.5]),
                ..base
            },
        }
    }

    /// Fraud rate for a group in a month (1-based).
    pub fn group_prevalence(&self, minority: bool, month: u8) -> f64 {
        let pi = self.prevalence[(month - FIRST_MONTH) as usize];
        let ratio = if self.disparity_months.contains(&month) {
            self.prevalence_ratio
        } else {
            1.0
        };
        let f = self.minority_fraction;
        let majority = pi / (1.0 - f + f * ratio);
        if minority {
            ratio * majority
        } else {
            majority
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: String| Err(SyntheticError::InvalidSpec(m));
        if self.n_rows == 0 {
            return bad("n_rows must be positive".into());
        }
        if self.n_features == 0 {
            return bad("n_features must be positive".into());
        }
        if self.month_weights.len() != N_MONTHS || self.prevalence.len() != N_MONTHS {
            return bad(format!("month_weights and prevalence need {N_MONTHS} entries"));
        }
        if self.month_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("month weights must be positive".into());
        }
        if !(self.minority_fraction > 0.0 && self.minority_fraction < 1.0) {
            return bad(format!(
                "minority_fraction {} outside (0, 1)",
                self.minority_fraction
            ));
        }
        if !(self.prevalence_ratio.is_finite() && self.prevalence_ratio > 0.0) {
            return bad("prevalence_ratio must be positive".into());
        }
        if self
            .disparity_months
            .iter()
            .any(|m| !(FIRST_MONTH..=LAST_MONTH).contains(m))
        {
            return bad("disparity month outside 1..=8".into());
        }
        for m in FIRST_MONTH..=LAST_MONTH {
            for minority in [false, true] {
                let p = self.group_prevalence(minority, m);
                if !(p > 0.0 && p < 1.0) {
                    return bad(format!("prevalence {p} for month {m} outside (0, 1)"));
                }
            }
        }
        if !(self.separability.majority.is_finite() && self.separability.minority.is_finite()) {
            return bad("separability must be finite".into());
        }
        if self.drift.len() != N_MONTHS
            || self.drift.iter().any(|row| {
                row.len() != self.n_features || row.iter().any(|v| !v.is_finite())
            })
        {
            return bad(format!(
                "drift must be {N_MONTHS} finite rows of {} values",
                self.n_features
            ));
        }
        Ok(())
    }

    /// Rows per month by largest remainder, summing to `n_rows`.
    pub fn month_counts(&self) -> Vec<usize> {
        let total: f64 = self.month_weights.iter().sum();
        let exact: Vec<f64> = self
            .month_weights
            .iter()
            .map(|w| w / total * self.n_rows as f64)
            .collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut rest = self.n_rows - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..N_MONTHS).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &m in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[m] += 1;
            rest -= 1;
        }
        counts
    }
}

/// Unit-norm direction along which fraud separates, decaying weights `1/(j+1)`.
pub fn loading(n_features: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n_features).map(|j| 1.0 / (j + 1) as f64).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.iter().map(|v| v / norm).collect()
}

/// Fraud-class mean shift ramping linearly from 0 in month 1 to `-totals[j]`
/// in month 8 on feature `j`; fraud drifts toward the legitimate class.
pub fn ramp_drift(n_features: usize, totals: &[f64]) -> Vec<Vec<f64>> {
    (0..N_MONTHS)
        .map(|m| {
            let frac = m as f64 / (N_MONTHS - 1) as f64;
            (0..n_features)
                .map(|j| -frac * totals.get(j).copied().unwrap_or(0.0))
                .collect()
        })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<FeatureDataset, SyntheticError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.n_features;
    let dir = loading(d);

    let mut features = Vec::with_capacity(spec.n_rows * d);
    let mut labels = Vec::with_capacity(spec.n_rows);
    let mut group = Vec::with_capacity(spec.n_rows);
    let mut month = Vec::with_capacity(spec.n_rows);

    for (mi, &count) in spec.month_counts().iter().enumerate() {
        let m = FIRST_MONTH + mi as u8;
        let shift = &spec.drift[mi];
        for _ in 0..count {
            let minority = rng.random_bool(spec.minority_fraction);
            let fraud = rng.random_bool(spec.group_prevalence(minority, m));
            let gap = spec.separability.get(minority);
            for j in 0..d {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let mean = if fraud { gap * dir[j] + shift[j] } else { 0.0 };
                features.push(mean + noise);
            }
            labels.push(fraud);
            group.push(if minority { MINORITY } else { MAJORITY }.to_string());
            month.push(m);
        }
    }
    FeatureDataset::new(d, features, labels, group, month)
        .map_err(|e| SyntheticError::InvalidSpec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("5".parse::<Variant>().unwrap(), Variant::V);
        assert_eq!("Variant_III".parse::<Variant>().unwrap(), Variant::III);
        assert!("VI".parse::<Variant>().is_err());
    }

    #[test]
    fn month_counts_sum() {
        for n in [1, 7, 100, 12_345] {
            let spec = SyntheticSpec::base(n, 0);
            assert_eq!(spec.month_counts().iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn group_mix_preserves_overall_rate() {
        for v in Variant::ALL {
            let spec = SyntheticSpec::for_variant(v, 10, 0);
            spec.validate().unwrap();
            for m in 1..=8u8 {
                let f = spec.minority_fraction;
                let mix = (1.0 - f) * spec.group_prevalence(false, m)
                    + f * spec.group_prevalence(true, m);
                assert!((mix - spec.prevalence[(m - 1) as usize]).abs() < 1e-15);
            }
        }
        let ii = SyntheticSpec::for_variant(Variant::II, 10, 0);
        let r = ii.group_prevalence(true, 3) / ii.group_prevalence(false, 3);
        assert!((r - 5.0).abs() < 1e-12);
        let iv = SyntheticSpec::for_variant(Variant::IV, 10, 0);
        assert_eq!(iv.group_prevalence(true, 8), iv.group_prevalence(false, 8));
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = SyntheticSpec::base(10, 0);
        s.minority_fraction = 1.0;
        assert!(generate(&s).is_err());
        let mut s = SyntheticSpec::base(10, 0);
        s.prevalence[2] = 1.5;
        assert!(s.validate().is_err());
        let mut s = SyntheticSpec::base(10, 0);
        s.drift.pop();
        assert!(s.validate().is_err());
        let s = SyntheticSpec::base(0, 0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn loading_is_unit() {
        let l = loading(8);
        assert!((l.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(l.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::for_variant(Variant::V, 2_000, 42);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SyntheticSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }
}
