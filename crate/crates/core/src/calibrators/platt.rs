//! Platt scaling: `P(y=1|s) = 1 / (1 + exp(A·s + B))`.
//!
//! The sign convention is kept as written, so a positively oriented score
//! produces `A < 0`. Fitting follows Platt's recipe with optional target
//! smoothing and a damped Newton iteration. `A` is unconstrained: an
//! anti-oriented score yields `A > 0` and a decreasing map.

use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, LogisticProblem, NewtonOptions};
use super::{input_logits, CalibrationError, Result};
use crate::score_data::ScoreSet;

/// Largest magnitude either parameter may reach.
pub const PLATT_PARAM_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

impl PlattParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(CalibrationError::InvalidModel(format!(
                "platt parameters must be finite, got A={a}, B={b}"
            )));
        }
        Ok(Self { a, b })
    }

    /// Probability for a margin-space (or logit) score.
    pub fn apply(&self, s: f64) -> f64 {
        sigmoid(-(self.a * s + self.b))
    }
}

struct PlattData {
    x: Vec<[f64; 2]>,
    targets: Vec<f64>,
    weights: Vec<f64>,
    start: [f64; 2],
}

fn prepare(val: &ScoreSet, smoothing: bool) -> Result<PlattData> {
    if !val.has_both_classes() {
        return Err(CalibrationError::SingleClass);
    }
    let logits = input_logits(val);
    let weights: Vec<f64> = (0..val.len()).map(|i| val.weight(i)).collect();
    let (mut wpos, mut wneg) = (0.0, 0.0);
    for (&y, &w) in val.labels().iter().zip(&weights) {
        if y {
            wpos += w;
        } else {
            wneg += w;
        }
    }
    if wpos <= 0.0 || wneg <= 0.0 {
        return Err(CalibrationError::SingleClass);
    }
    let (hi, lo) = if smoothing {
        ((wpos + 1.0) / (wpos + 2.0), 1.0 / (wneg + 2.0))
    } else {
        (1.0, 0.0)
    };
    let targets = val.labels().iter().map(|&y| if y { hi } else { lo }).collect();
    let x = logits.iter().map(|&s| [s, 1.0]).collect();
    // A = 0, B = ln((N- + 1) / (N+ + 1)); coefficients are (-A, -B).
    let b0 = ((wneg + 1.0) / (wpos + 1.0)).ln();
    Ok(PlattData {
        x,
        targets,
        weights,
        start: [0.0, -b0],
    })
}

/// Starting parameters of the Newton iteration.
pub fn platt_start(val: &ScoreSet, smoothing: bool) -> Result<PlattParams> {
    let data = prepare(val, smoothing)?;
    Ok(PlattParams {
        a: -data.start[0],
        b: -data.start[1],
    })
}

/// Mean fitting objective (weighted NLL against the possibly smoothed targets).
pub fn platt_objective(params: &PlattParams, val: &ScoreSet, smoothing: bool) -> Result<f64> {
    let data = prepare(val, smoothing)?;
    let prob = LogisticProblem {
        x: &data.x,
        targets: &data.targets,
        weights: &data.weights,
    };
    Ok(prob.loss(&[-params.a, -params.b]))
}

/// Midpoint of the gap and the sign of `-A` when the classes do not overlap.
fn separation_point(x: &[[f64; 2]], val: &ScoreSet, weights: &[f64]) -> Option<(f64, f64)> {
    let (mut min_pos, mut max_pos) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_neg, mut max_neg) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((row, &y), &w) in x.iter().zip(val.labels()).zip(weights) {
        if w <= 0.0 {
            continue;
        }
        if y {
            min_pos = min_pos.min(row[0]);
            max_pos = max_pos.max(row[0]);
        } else {
            min_neg = min_neg.min(row[0]);
            max_neg = max_neg.max(row[0]);
        }
    }
    if max_neg < min_pos {
        Some((0.5 * (max_neg + min_pos), 1.0))
    } else if max_pos < min_neg {
        Some((0.5 * (max_pos + min_neg), -1.0))
    } else {
        None
    }
}

pub fn fit_platt(val: &ScoreSet, smoothing: bool) -> Result<PlattParams> {
    let data = prepare(val, smoothing)?;

    if !smoothing {
        if let Some((mid, orientation)) = separation_point(&data.x, val, &data.weights) {
            // Likelihood is unbounded; return the steepest capped sigmoid through the gap.
            let a = -orientation * PLATT_PARAM_CAP / mid.abs().max(1.0);
            log::warn!("platt: classes are perfectly separated, parameters capped at {PLATT_PARAM_CAP}");
            return PlattParams::new(a, -a * mid);
        }
    }

    let prob = LogisticProblem {
        x: &data.x,
        targets: &data.targets,
        weights: &data.weights,
    };
    let opts = NewtonOptions {
        cap: PLATT_PARAM_CAP,
        ..NewtonOptions::default()
    };
    let out = prob.minimize(data.start, [true, true], opts);
    if out.capped {
        log::warn!("platt: parameters reached the cap of {PLATT_PARAM_CAP}");
    }
    if !out.converged {
        log::debug!("platt: stopped after {} iterations without convergence", out.iterations);
    }
    PlattParams::new(-out.coef[0], -out.coef[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score_data::ScoreSpace;

    fn margin(scores: Vec<f64>, labels: &[u8]) -> ScoreSet {
        ScoreSet::from_binary(scores, labels, ScoreSpace::Margin).unwrap()
    }

    #[test]
    fn zero_params_give_half() {
        let p = PlattParams::new(0.0, 0.0).unwrap();
        for s in [-100.0, -1.0, 0.0, 3.0, 1e6] {
            assert_eq!(p.apply(s), 0.5);
        }
    }

    #[test]
    fn negative_a_at_zero_is_half() {
        let p = PlattParams::new(-1.0, 0.0).unwrap();
        assert_eq!(p.apply(0.0), 0.5);
        assert!(p.apply(1.0) > 0.5);
    }

    #[test]
    fn single_class_is_rejected() {
        let set = margin(vec![0.1, 0.2], &[1, 1]);
        assert!(matches!(fit_platt(&set, true), Err(CalibrationError::SingleClass)));
    }

    #[test]
    fn separated_data_hits_cap() {
        let scores: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
        let labels: Vec<u8> = (0..40).map(|i| (i >= 20) as u8).collect();
        let set = margin(scores, &labels);
        let p = fit_platt(&set, false).unwrap();
        assert!(p.a.is_finite() && p.b.is_finite());
        assert_eq!(p.a.abs().max(p.b.abs()), PLATT_PARAM_CAP);
        assert!(p.a < 0.0);
        assert!(p.apply(-0.15) < 1e-6);
        assert!(p.apply(0.05) > 1.0 - 1e-6);
    }

    #[test]
    fn smoothing_keeps_separated_fit_finite() {
        let scores: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
        let labels: Vec<u8> = (0..40).map(|i| (i >= 20) as u8).collect();
        let p = fit_platt(&margin(scores, &labels), true).unwrap();
        assert!(p.a < 0.0 && p.a.abs() < PLATT_PARAM_CAP);
    }

    #[test]
    fn anti_oriented_scores_give_positive_slope() {
        let scores: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
        let labels: Vec<u8> = (0..40).map(|i| (i % 5 == 0 || i < 10) as u8).collect();
        let p = fit_platt(&margin(scores, &labels), true).unwrap();
        assert!(p.a > 0.0);
        assert!(p.apply(-2.0) > p.apply(2.0));
    }

    #[test]
    fn reversed_separation_caps_with_positive_slope() {
        let scores: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let labels: Vec<u8> = (0..20).map(|i| (i < 10) as u8).collect();
        let p = fit_platt(&margin(scores, &labels), false).unwrap();
        assert!(p.a > 0.0);
        assert!(p.apply(9.0) > 1.0 - 1e-6 && p.apply(10.0) < 1e-6);
    }

    #[test]
    fn fit_never_worse_than_start() {
        let scores: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 25.0 - 2.0).collect();
        let labels: Vec<u8> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| ((s + (i % 7) as f64 / 3.0) > 1.0) as u8)
            .collect();
        let set = margin(scores, &labels);
        for smoothing in [true, false] {
            let fit = fit_platt(&set, smoothing).unwrap();
            let start = platt_start(&set, smoothing).unwrap();
            assert!(
                platt_objective(&fit, &set, smoothing).unwrap()
                    <= platt_objective(&start, &set, smoothing).unwrap()
            );
        }
    }
}
