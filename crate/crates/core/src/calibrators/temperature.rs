//! Binary temperature scaling: `P(y=1|z) = 1 / (1 + exp(-z / T))`.

use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};
use super::{input_logits, CalibrationError, Result};
use crate::score_data::ScoreSet;

pub const MIN_TEMPERATURE: f64 = 0.05;
pub const MAX_TEMPERATURE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureParams {
    pub t: f64,
}

impl TemperatureParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(MIN_TEMPERATURE..=MAX_TEMPERATURE).contains(&t) {
            return Err(CalibrationError::InvalidModel(format!(
                "temperature {t} outside [{MIN_TEMPERATURE}, {MAX_TEMPERATURE}]"
            )));
        }
        Ok(Self { t })
    }

    pub fn apply(&self, z: f64) -> f64 {
        sigmoid(z / self.t)
    }
}

/// Weighted mean NLL of temperature `t` on logits `z`.
pub fn temperature_nll(t: f64, z: &[f64], labels: &[bool], weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut tw = 0.0;
    for ((&z, &y), &w) in z.iter().zip(labels).zip(weights) {
        let eta = z / t;
        acc += w * (softplus(eta) - if y { eta } else { 0.0 });
        tw += w;
    }
    acc / tw
}

/// Golden-section search over `ln T`. The binary NLL is convex in `1/T`, so
/// it is unimodal along `ln T` and the search brackets the optimum.
pub fn fit_temperature(val: &ScoreSet) -> Result<TemperatureParams> {
    if !val.has_both_classes() {
        return Err(CalibrationError::SingleClass);
    }
    let z = input_logits(val);
    let weights: Vec<f64> = (0..val.len()).map(|i| val.weight(i)).collect();
    let f = |u: f64| temperature_nll(u.exp(), &z, val.labels(), &weights);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (MIN_TEMPERATURE.ln(), MAX_TEMPERATURE.ln());
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-7 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let interior = (0.5 * (lo + hi)).exp().clamp(MIN_TEMPERATURE, MAX_TEMPERATURE);
    let (t, _) = [interior, MIN_TEMPERATURE, MAX_TEMPERATURE]
        .into_iter()
        .map(|t| (t, f(t.ln())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three candidates");
    TemperatureParams::new(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score_data::ScoreSpace;

    #[test]
    fn unit_temperature_is_plain_sigmoid() {
        let p = TemperatureParams::new(1.0).unwrap();
        for z in [-5.0, -0.3, 0.0, 2.0, 7.5] {
            assert_eq!(p.apply(z), sigmoid(z));
        }
    }

    #[test]
    fn halves_the_logit() {
        let p = TemperatureParams::new(2.0).unwrap();
        assert!((p.apply(2.0) - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn bounds_enforced() {
        assert!(TemperatureParams::new(0.01).is_err());
        assert!(TemperatureParams::new(25.0).is_err());
    }

    #[test]
    fn separated_logits_push_to_lower_bound() {
        let set = ScoreSet::from_binary(vec![-3.0, -2.0, 2.0, 3.0], &[0, 0, 1, 1], ScoreSpace::Margin)
            .unwrap();
        let t = fit_temperature(&set).unwrap();
        assert_eq!(t.t, MIN_TEMPERATURE);
    }

    #[test]
    fn single_class_rejected() {
        let set = ScoreSet::from_binary(vec![0.2, 0.4], &[0, 0], ScoreSpace::Probability).unwrap();
        assert!(matches!(fit_temperature(&set), Err(CalibrationError::SingleClass)));
    }
}
