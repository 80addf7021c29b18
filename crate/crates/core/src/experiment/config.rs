use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::calibrators::Method;
use crate::metrics::DEFAULT_ECE_BINS;
use crate::score_data::{FIRST_MONTH, LAST_MONTH};
use crate::seeds::derive_seed;
use crate::synthetic::{SyntheticSpec, TrainSettings, Variant};

pub const DEFAULT_N_BOOTSTRAPS: usize = 20;
pub const DEFAULT_TARGET_RECALL: f64 = 0.95;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.25;
pub const DEFAULT_TARGET_FPR: f64 = 0.05;
pub const DEFAULT_N_ROWS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean with sample standard deviation (`n − 1` denominator).
    #[default]
    MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Inclusive `[first, last]` months used for training and validation.
    pub train_months: (u8, u8),
    /// Share of training-month rows held out once per variant for calibration.
    pub validation_fraction: f64,
    pub test_months: (u8, u8),
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_months: (FIRST_MONTH, 6),
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            test_months: (7, LAST_MONTH),
        }
    }
}

impl SplitConfig {
    pub fn train_range(&self) -> RangeInclusive<u8> {
        self.train_months.0..=self.train_months.1
    }

    pub fn test_range(&self) -> RangeInclusive<u8> {
        self.test_months.0..=self.test_months.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub variants: Vec<Variant>,
    pub methods: Vec<Method>,
    pub n_bootstraps: usize,
    pub target_recall: f64,
    pub master_seed: u64,
    /// Rows generated per variant.
    pub n_rows: usize,
    pub split: SplitConfig,
    pub classifier: TrainSettings,
    pub aggregation: Aggregation,
    pub ece_bins: usize,
    pub target_fpr: f64,
    pub platt_smoothing: bool,
    /// Per-variant root seeds replacing the ones derived from `master_seed`.
    pub seed_overrides: BTreeMap<Variant, u64>,
    /// Per-variant feature CSVs used instead of generated data.
    pub datasets: BTreeMap<Variant, PathBuf>,
    /// Per-variant generator specs replacing the presets; `n_rows` and `seed` are overwritten.
    pub synthetic: BTreeMap<Variant, SyntheticSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            n_bootstraps: DEFAULT_N_BOOTSTRAPS,
            target_recall: DEFAULT_TARGET_RECALL,
            master_seed: 0,
            n_rows: DEFAULT_N_ROWS,
            split: SplitConfig::default(),
            classifier: TrainSettings::default(),
            aggregation: Aggregation::MeanStd,
            ece_bins: DEFAULT_ECE_BINS,
            target_fpr: DEFAULT_TARGET_FPR,
            platt_smoothing: true,
            seed_overrides: BTreeMap::new(),
            datasets: BTreeMap::new(),
            synthetic: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.variants.is_empty() {
            return bad("variants must not be empty");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if has_duplicates(&self.variants) || has_duplicates(&self.methods) {
            return bad("variants and methods must be unique");
        }
        if self.n_bootstraps == 0 {
            return bad("n_bootstraps must be at least 1");
        }
        if u32::try_from(self.n_bootstraps).is_err() {
            return bad("n_bootstraps too large");
        }
        if !(self.target_recall > 0.0 && self.target_recall <= 1.0) {
            return bad("target_recall must lie in (0, 1]");
        }
        let f = self.split.validation_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        for (a, b) in [self.split.train_months, self.split.test_months] {
            if a > b || a < FIRST_MONTH || b > LAST_MONTH {
                return bad("month ranges must be ordered and within 1..=8");
            }
        }
        let (tr, te) = (self.split.train_months, self.split.test_months);
        if tr.0 <= te.1 && te.0 <= tr.1 {
            return bad("train and test months overlap");
        }
        if self.ece_bins == 0 {
            return bad("ece_bins must be positive");
        }
        if !(self.target_fpr > 0.0 && self.target_fpr < 1.0) {
            return bad("target_fpr must lie in (0, 1)");
        }
        if self.datasets.is_empty() && self.n_rows == 0 {
            return bad("n_rows must be positive");
        }
        self.classifier
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Root seed for every random stream of `variant`.
    pub fn variant_seed(&self, variant: Variant) -> u64 {
        self.seed_overrides
            .get(&variant)
            .copied()
            .unwrap_or_else(|| derive_seed(self.master_seed, &[variant.index()]))
    }

    pub fn synthetic_spec(&self, variant: Variant) -> SyntheticSpec {
        let seed = derive_seed(self.variant_seed(variant), &[STREAM_DATA]);
        match self.synthetic.get(&variant) {
            Some(spec) => SyntheticSpec {
                n_rows: self.n_rows,
                seed,
                ..spec.clone()
            },
            None => SyntheticSpec::for_variant(variant, self.n_rows, seed),
        }
    }
}

pub(crate) const STREAM_DATA: u64 = 0;
pub(crate) const STREAM_SPLIT: u64 = 1;
pub(crate) const STREAM_BOOTSTRAP: u64 = 2;

fn has_duplicates<T: Ord + Clone>(items: &[T]) -> bool {
    let mut sorted = items.to_vec();
    sorted.sort();
    sorted.windows(2).any(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"variants": ["V"], "n_bootstraps": 3}"#).unwrap();
        assert_eq!(cfg.variants, vec![Variant::V]);
        assert_eq!(cfg.n_bootstraps, 3);
        assert_eq!(cfg.target_recall, 0.95);
        assert_eq!(cfg.split.validation_fraction, 0.25);
    }

    #[test]
    fn rejects_bad_configs() {
        let c = ExperimentConfig {
            n_bootstraps: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.split.validation_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.split.test_months = (6, 8);
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            methods: vec![Method::Beta, Method::Beta],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_only_touch_their_variant() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed_overrides.insert(Variant::V, 99);
        assert_eq!(a.variant_seed(Variant::Base), b.variant_seed(Variant::Base));
        assert_ne!(a.variant_seed(Variant::V), b.variant_seed(Variant::V));
    }
}
