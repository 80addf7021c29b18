//! Operating-point and calibration metrics.
//!
//! The decision rule everywhere is `score >= threshold ⇒ positive`.
//! Ratios with an empty denominator are `None` rather than an error so
//! aggregation over bootstraps survives degenerate draws.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrators::PROBABILITY_EPS;
use crate::score_data::{ScoreSet, ScoreSpace};

pub const DEFAULT_ECE_BINS: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric requires probability-space scores")]
    MarginSpace,
    #[error("metric requires both classes")]
    SingleClass,
    #[error("target false-positive rate {0} must lie in (0, 1)")]
    InvalidTarget(f64),
    #[error("number of bins must be at least 1")]
    NoBins,
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// True-positive rate.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    c.precision()
}

pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    c.recall()
}

pub fn fpr(c: &ConfusionCounts) -> Option<f64> {
    c.fpr()
}

pub fn confusion_at(set: &ScoreSet, threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (&s, &y) in set.scores().iter().zip(set.labels()) {
        match (s >= threshold, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TprAtFpr {
    pub tpr: f64,
    pub fpr: f64,
    /// Smallest observed score meeting the target; `+inf` when none does.
    #[serde(skip)]
    pub threshold: f64,
}

/// Highest TPR achievable with FPR ≤ `target_fpr`, scanning every observed score as a threshold.
pub fn tpr_at_fpr(set: &ScoreSet, target_fpr: f64) -> Result<TprAtFpr> {
    if !(target_fpr > 0.0 && target_fpr < 1.0) {
        return Err(MetricsError::InvalidTarget(target_fpr));
    }
    if !set.has_both_classes() {
        return Err(MetricsError::SingleClass);
    }
    let n_pos = set.n_positive() as f64;
    let n_neg = set.n_negative() as f64;
    let mut order: Vec<usize> = (0..set.len()).collect();
    let scores = set.scores();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));

    let mut best = TprAtFpr {
        tpr: 0.0,
        fpr: 0.0,
        threshold: f64::INFINITY,
    };
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let v = scores[order[k]];
        while k < order.len() && scores[order[k]] == v {
            if set.labels()[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let rate = fp as f64 / n_neg;
        if rate > target_fpr {
            break;
        }
        best = TprAtFpr {
            tpr: tp as f64 / n_pos,
            fpr: rate,
            threshold: v,
        };
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_predicted: Option<f64>,
    pub empirical_rate: Option<f64>,
    pub count: u64,
}

fn require_probability(set: &ScoreSet) -> Result<()> {
    match set.score_space() {
        ScoreSpace::Probability => Ok(()),
        ScoreSpace::Margin => Err(MetricsError::MarginSpace),
    }
}

/// Bin `b` of `k` covers `(b/k, (b+1)/k]`; a score of exactly 0 falls in the first bin.
fn bin_index(p: f64, k: usize) -> usize {
    ((p * k as f64).ceil() as usize).saturating_sub(1).min(k - 1)
}

/// Equal-width, right-closed reliability bins on `[0, 1]`.
pub fn reliability_bins(set: &ScoreSet, bins: usize) -> Result<Vec<ReliabilityBin>> {
    require_probability(set)?;
    if bins == 0 {
        return Err(MetricsError::NoBins);
    }
    let mut sum_p = vec![0.0; bins];
    let mut sum_y = vec![0.0; bins];
    let mut count = vec![0u64; bins];
    for (&p, &y) in set.scores().iter().zip(set.labels()) {
        let b = bin_index(p, bins);
        sum_p[b] += p;
        sum_y[b] += y as u8 as f64;
        count[b] += 1;
    }
    Ok((0..bins)
        .map(|b| {
            let n = count[b] as f64;
            ReliabilityBin {
                lower: b as f64 / bins as f64,
                upper: (b + 1) as f64 / bins as f64,
                mean_predicted: (count[b] > 0).then(|| sum_p[b] / n),
                empirical_rate: (count[b] > 0).then(|| sum_y[b] / n),
                count: count[b],
            }
        })
        .collect())
}

pub fn ece_from_bins(bins: &[ReliabilityBin]) -> f64 {
    let n: u64 = bins.iter().map(|b| b.count).sum();
    if n == 0 {
        return 0.0;
    }
    bins.iter()
        .filter_map(|b| {
            let (p, r) = (b.mean_predicted?, b.empirical_rate?);
            Some(b.count as f64 / n as f64 * (p - r).abs())
        })
        .sum()
}

/// Expected calibration error over `bins` equal-width bins.
pub fn ece(set: &ScoreSet, bins: usize) -> Result<f64> {
    Ok(ece_from_bins(&reliability_bins(set, bins)?))
}

pub fn brier(set: &ScoreSet) -> Result<f64> {
    require_probability(set)?;
    let sum: f64 = set
        .scores()
        .iter()
        .zip(set.labels())
        .map(|(&p, &y)| (y as u8 as f64 - p).powi(2))
        .sum();
    Ok(sum / set.len() as f64)
}

/// Mean negative log-likelihood with probabilities clamped to `[1e-12, 1 − 1e-12]`.
pub fn nll(set: &ScoreSet) -> Result<f64> {
    require_probability(set)?;
    let sum: f64 = set
        .scores()
        .iter()
        .zip(set.labels())
        .map(|(&p, &y)| {
            let p = p.clamp(PROBABILITY_EPS, 1.0 - PROBABILITY_EPS);
            if y {
                -p.ln()
            } else {
                -(-p).ln_1p()
            }
        })
        .sum();
    Ok(sum / set.len() as f64)
}

/// Everything reported for one calibrated score set at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub target_fpr: f64,
    pub tpr_at_fpr: Option<f64>,
    pub ece: f64,
    pub brier: f64,
    pub nll: f64,
    pub reliability: Vec<ReliabilityBin>,
}

pub fn evaluate(
    set: &ScoreSet,
    threshold: f64,
    ece_bins: usize,
    target_fpr: f64,
) -> Result<MetricsReport> {
    let counts = confusion_at(set, threshold);
    let reliability = reliability_bins(set, ece_bins)?;
    let tpr = match tpr_at_fpr(set, target_fpr) {
        Ok(r) => Some(r.tpr),
        Err(MetricsError::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        threshold,
        counts,
        precision: counts.precision(),
        recall: counts.recall(),
        fpr: counts.fpr(),
        target_fpr,
        tpr_at_fpr: tpr,
        ece: ece_from_bins(&reliability),
        brier: brier(set)?,
        nll: nll(set)?,
        reliability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(scores: Vec<f64>, labels: &[u8]) -> ScoreSet {
        ScoreSet::from_binary(scores, labels, ScoreSpace::Probability).unwrap()
    }

    #[test]
    fn confusion_two_rows() {
        let c = confusion_at(&prob(vec![0.9, 0.1], &[1, 0]), 0.5);
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 0,
                tn: 1,
                fn_: 0
            }
        );
    }

    #[test]
    fn threshold_above_max() {
        let c = confusion_at(&prob(vec![0.9, 0.1, 0.4], &[1, 0, 1]), 0.95);
        assert_eq!((c.tp, c.fp), (0, 0));
        assert_eq!(c.precision(), None);
        assert_eq!(c.recall(), Some(0.0));
    }

    #[test]
    fn ratio_values() {
        let c = ConfusionCounts {
            tp: 3,
            fp: 1,
            tn: 5,
            fn_: 0,
        };
        assert_eq!(precision(&c), Some(0.75));
        assert_eq!(recall(&c), Some(1.0));
        assert_eq!(fpr(&c), Some(1.0 / 6.0));
        assert_eq!(precision(&ConfusionCounts::default()), None);
    }

    #[test]
    fn tie_counts_as_positive() {
        let c = confusion_at(&prob(vec![0.5], &[1]), 0.5);
        assert_eq!(c.tp, 1);
    }

    #[test]
    fn tpr_separated() {
        let set = prob(vec![0.9, 0.8, 0.2, 0.1, 0.15], &[1, 1, 0, 0, 0]);
        let r = tpr_at_fpr(&set, 0.05).unwrap();
        assert_eq!(r.tpr, 1.0);
        assert_eq!(r.fpr, 0.0);
        assert_eq!(r.threshold, 0.8);
    }

    #[test]
    fn tpr_target_must_be_positive() {
        let set = prob(vec![1.0, 0.0], &[1, 0]);
        assert_eq!(tpr_at_fpr(&set, 0.0), Err(MetricsError::InvalidTarget(0.0)));
        assert_eq!(
            tpr_at_fpr(&prob(vec![0.3], &[1]), 0.1),
            Err(MetricsError::SingleClass)
        );
    }

    #[test]
    fn ece_perfect() {
        let set = prob(vec![0.5; 4], &[1, 0, 1, 0]);
        assert_eq!(ece(&set, 15).unwrap(), 0.0);
    }

    #[test]
    fn ece_two_bins_by_hand() {
        let set = prob(vec![0.2, 0.2, 0.8, 0.8], &[0, 1, 1, 1]);
        assert!((ece(&set, 2).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.1000001, 10), 1);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.5, 2), 0);
    }

    #[test]
    fn ece_rejects_margin() {
        let set = ScoreSet::from_binary(vec![3.0], &[1], ScoreSpace::Margin).unwrap();
        assert_eq!(ece(&set, 15), Err(MetricsError::MarginSpace));
        assert_eq!(reliability_bins(&prob(vec![0.3], &[1]), 0), Err(MetricsError::NoBins));
    }

    #[test]
    fn brier_and_nll_analytic() {
        let hard = prob(vec![1.0, 0.0, 1.0], &[1, 0, 1]);
        assert_eq!(brier(&hard).unwrap(), 0.0);
        let half = prob(vec![0.5; 4], &[1, 0, 0, 1]);
        assert_eq!(brier(&half).unwrap(), 0.25);
        assert!((nll(&half).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn evaluate_bins_sum_to_n() {
        let set = prob(vec![0.05, 0.3, 0.31, 0.7, 0.99, 1.0], &[0, 0, 1, 1, 1, 0]);
        let r = evaluate(&set, 0.5, 15, 0.4).unwrap();
        assert_eq!(r.reliability.iter().map(|b| b.count).sum::<u64>(), 6);
        assert_eq!(r.counts.total(), 6);
        assert_eq!(r.precision, Some(2.0 / 3.0));
    }
}
