//! Beta calibration: `m(p; a, b, c) = pᵃ·c / (pᵃ·c + (1−p)ᵇ)`.
//!
//! Written as a logistic model `σ(a·ln p − b·ln(1−p) + ln c)`, so fitting is a
//! three-coefficient logistic regression over the features `ln p` and
//! `−ln(1−p)`. Negative `a` or `b` would break monotonicity; those features
//! are dropped and the model refit.

use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, LogisticProblem, NewtonOptions};
use super::{clamp_probability, CalibrationError, Result};
use crate::score_data::{ScoreSet, ScoreSpace};

/// Bound on each fitted coefficient, low enough that `c = e^{ln c}` stays finite.
pub const BETA_COEF_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let ok = a.is_finite() && b.is_finite() && c.is_finite() && a >= 0.0 && b >= 0.0 && c > 0.0;
        if !ok {
            return Err(CalibrationError::InvalidModel(format!(
                "beta parameters need a, b >= 0 and c > 0, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c: 1.0,
        }
    }

    /// Calibrated probability for a probability-space score.
    pub fn apply(&self, p: f64) -> f64 {
        let p = clamp_probability(p);
        sigmoid(self.a * p.ln() - self.b * (-p).ln_1p() + self.c.ln())
    }
}

pub(crate) fn beta_features(val: &ScoreSet) -> Vec<[f64; 3]> {
    val.scores()
        .iter()
        .map(|&s| {
            let p = match val.score_space() {
                ScoreSpace::Probability => s,
                ScoreSpace::Margin => sigmoid(s),
            };
            let p = clamp_probability(p);
            [p.ln(), -(-p).ln_1p(), 1.0]
        })
        .collect()
}

/// Weighted mean NLL, the fitting objective divided by the total weight.
pub fn beta_nll(params: &BetaParams, val: &ScoreSet) -> f64 {
    let x = beta_features(val);
    let t: Vec<f64> = val.labels().iter().map(|&y| y as u8 as f64).collect();
    let w: Vec<f64> = (0..val.len()).map(|i| val.weight(i)).collect();
    LogisticProblem {
        x: &x,
        targets: &t,
        weights: &w,
    }
    .loss(&[params.a, params.b, params.c.ln()])
}

/// Fits `(a, b, c)` by maximum likelihood subject to `a, b ≥ 0`.
///
/// The unconstrained fit is tried first. If a shape coefficient comes out
/// negative, each face of the constraint set with that coefficient pinned to
/// zero is refit and the best feasible fit is kept. The objective is convex,
/// so the best feasible face optimum is the constrained optimum.
pub fn fit_beta(val: &ScoreSet) -> Result<BetaParams> {
    if !val.has_both_classes() {
        return Err(CalibrationError::SingleClass);
    }
    let x = beta_features(val);
    let t: Vec<f64> = val.labels().iter().map(|&y| y as u8 as f64).collect();
    let w: Vec<f64> = (0..val.len()).map(|i| val.weight(i)).collect();
    let prob = LogisticProblem {
        x: &x,
        targets: &t,
        weights: &w,
    };
    let opts = NewtonOptions {
        cap: BETA_COEF_CAP,
        ..NewtonOptions::default()
    };

    let faces: [[bool; 3]; 4] = [
        [true, true, true],
        [false, true, true],
        [true, false, true],
        [false, false, true],
    ];
    let mut best: Option<([f64; 3], f64)> = None;
    for active in faces {
        let start = [active[0] as u8 as f64, active[1] as u8 as f64, 0.0];
        let out = prob.minimize(start, active, opts);
        let coef = out.coef;
        if coef[0] < 0.0 || coef[1] < 0.0 {
            continue;
        }
        let loss = prob.loss(&coef);
        if best.is_none_or(|(_, l)| loss < l) {
            best = Some((coef, loss));
        }
        if active == [true, true, true] {
            // The unconstrained optimum is feasible, nothing to refit.
            break;
        }
    }
    let (coef, _) = best.expect("intercept-only face is always feasible");
    BetaParams::new(coef[0], coef[1], coef[2].exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_params_reproduce_input() {
        let id = BetaParams::identity();
        for k in 0..1000 {
            let p = (k as f64 + 0.5) / 1000.0;
            assert!((id.apply(p) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_shape_at_half() {
        let m = BetaParams::new(2.0, 2.0, 3.0).unwrap();
        assert!((m.apply(0.5) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_shape() {
        assert!(BetaParams::new(-0.1, 1.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn anti_oriented_scores_give_nonnegative_shape() {
        let scores: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let labels: Vec<u8> = (1..100).map(|i| (i < 30 || i % 9 == 0) as u8).collect();
        let set = ScoreSet::from_binary(scores, &labels, ScoreSpace::Probability).unwrap();
        let fit = fit_beta(&set).unwrap();
        assert!(fit.a >= 0.0 && fit.b >= 0.0);
        let mut prev = 0.0;
        for k in 0..=200 {
            let v = fit.apply(k as f64 / 200.0);
            assert!(v >= prev);
            prev = v;
        }
    }
}
