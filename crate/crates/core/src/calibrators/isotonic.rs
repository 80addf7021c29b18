//! Isotonic regression by pool-adjacent-violators.

use serde::{Deserialize, Serialize};

use super::{CalibrationError, Result};
use crate::score_data::ScoreSet;

/// Pooled blocks of a fitted isotonic map: each block's weighted mean score
/// and its fitted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicModel {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl IsotonicModel {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let invalid = |msg: &str| Err(CalibrationError::InvalidModel(format!("isotonic: {msg}")));
        if breakpoints.is_empty() {
            return invalid("no breakpoints");
        }
        if breakpoints.len() != values.len() {
            return invalid("breakpoints and values differ in length");
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return invalid("non-finite breakpoint");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("breakpoints are not strictly increasing");
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("value outside [0, 1]");
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return invalid("values are decreasing");
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation between blocks, flat beyond the outermost ones.
    pub fn apply(&self, s: f64) -> f64 {
        let xs = &self.breakpoints;
        let ys = &self.values;
        let last = xs.len() - 1;
        if s <= xs[0] {
            return ys[0];
        }
        if s >= xs[last] {
            return ys[last];
        }
        // First breakpoint strictly greater than s; 1..=last here.
        let hi = xs.partition_point(|&x| x <= s);
        let lo = hi - 1;
        let t = (s - xs[lo]) / (xs[hi] - xs[lo]);
        (ys[lo] + t * (ys[hi] - ys[lo])).clamp(ys[lo], ys[hi])
    }
}

struct Block {
    weight: f64,
    sum_y: f64,
    sum_s: f64,
    min_s: f64,
    max_s: f64,
    /// Range of tie-pooled points covered, `start..end`.
    start: usize,
    end: usize,
}

impl Block {
    fn value(&self) -> f64 {
        self.sum_y / self.weight
    }

    fn merge(&mut self, other: Block) {
        self.weight += other.weight;
        self.sum_y += other.sum_y;
        self.sum_s += other.sum_s;
        self.max_s = other.max_s;
        self.end = other.end;
    }
}

/// Pools equal scores, then runs PAV. Returns blocks over the distinct
/// scores plus, for each input row, the index of its distinct score.
fn pav(scores: &[f64], targets: &[f64], weights: &[f64]) -> (Vec<Block>, Vec<usize>) {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    let mut point_of = vec![usize::MAX; scores.len()];
    let mut points: Vec<Block> = Vec::new();
    for &i in &order {
        let (s, w) = (scores[i], weights[i]);
        match points.last_mut() {
            Some(p) if p.max_s == s => {
                p.weight += w;
                p.sum_y += w * targets[i];
                p.sum_s += w * s;
            }
            _ => {
                let k = points.len();
                points.push(Block {
                    weight: w,
                    sum_y: w * targets[i],
                    sum_s: w * s,
                    min_s: s,
                    max_s: s,
                    start: k,
                    end: k + 1,
                });
            }
        }
        point_of[i] = points.len() - 1;
    }

    // Merge on ties as well as violations so block values strictly increase.
    let mut blocks: Vec<Block> = Vec::with_capacity(points.len());
    for p in points {
        let mut cur = p;
        while let Some(prev) = blocks.last() {
            if prev.value() >= cur.value() {
                let mut prev = blocks.pop().expect("non-empty");
                prev.merge(cur);
                cur = prev;
            } else {
                break;
            }
        }
        blocks.push(cur);
    }
    (blocks, point_of)
}

/// The minimizer of `Σ wᵢ (yᵢ − pᵢ)²` over `p` nondecreasing in the score,
/// for each input row (in input order). Rows with zero weight get the value
/// of the nearest pooled block below them, or above if none.
pub fn isotonic_fit_values(scores: &[f64], targets: &[f64], weights: &[f64]) -> Vec<f64> {
    let (blocks, point_of) = pav(scores, targets, weights);
    let mut point_value = Vec::new();
    for b in &blocks {
        point_value.extend(std::iter::repeat_n(b.value(), b.end - b.start));
    }
    let model = (!blocks.is_empty()).then(|| model_from_blocks(&blocks));
    (0..scores.len())
        .map(|i| match point_of[i] {
            usize::MAX => model.as_ref().map_or(0.0, |m| m.apply(scores[i])),
            k => point_value[k],
        })
        .collect()
}

fn model_from_blocks(blocks: &[Block]) -> IsotonicModel {
    let breakpoints = blocks
        .iter()
        .map(|b| (b.sum_s / b.weight).clamp(b.min_s, b.max_s))
        .collect();
    let values = blocks.iter().map(|b| b.value().clamp(0.0, 1.0)).collect();
    IsotonicModel {
        breakpoints,
        values,
    }
}

pub fn fit_isotonic(val: &ScoreSet) -> Result<IsotonicModel> {
    let targets: Vec<f64> = val.labels().iter().map(|&y| y as u8 as f64).collect();
    let weights: Vec<f64> = (0..val.len()).map(|i| val.weight(i)).collect();
    if val.scores().iter().any(|s| !s.is_finite()) {
        return Err(CalibrationError::InvalidModel(
            "isotonic: non-finite score in fitting set".into(),
        ));
    }
    let (blocks, _) = pav(val.scores(), &targets, &weights);
    if blocks.is_empty() {
        return Err(CalibrationError::Empty);
    }
    Ok(model_from_blocks(&blocks))
}
