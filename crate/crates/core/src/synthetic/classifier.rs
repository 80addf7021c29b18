//! Linear-logistic baseline trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrators::sigmoid;
use crate::score_data::{FeatureDataset, ScoreSet, ScoreSpace};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("feature dimension {found} does not match model dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid training settings: {0}")]
    Settings(String),
    #[error("training diverged to non-finite parameters")]
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Coefficient of `½‖w‖²` added to the mean log-loss; the bias is not penalized.
    pub l2: f64,
    /// Stop once every gradient component is below this magnitude.
    pub grad_tol: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 300,
            l2: 1e-4,
            grad_tol: 1e-7,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ClassifierError::Settings("learning_rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(ClassifierError::Settings("l2 must be non-negative".into()));
        }
        if self.grad_tol.is_nan() || self.grad_tol < 0.0 {
            return Err(ClassifierError::Settings("grad_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub settings: TrainSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: BaselineClassifier,
    /// Objective before each update, then once at the final parameters.
    pub loss_history: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Regularized mean log-loss with its gradient in `(weights, bias)`.
pub fn loss_and_gradient(
    data: &FeatureDataset,
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, &y) in data.rows().zip(data.labels()) {
        let eta = bias + x.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        let t = if y { 1.0 } else { 0.0 };
        loss += softplus(eta) - t * eta;
        let r = sigmoid(eta) - t;
        for (g, v) in gw.iter_mut().zip(x) {
            *g += r * v;
        }
        gb += r;
    }
    let penalty: f64 = weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + 0.5 * l2 * penalty, gw, gb / n)
}

pub fn train_baseline(
    data: &FeatureDataset,
    settings: TrainSettings,
) -> Result<BaselineClassifier, ClassifierError> {
    train_baseline_monitored(data, settings).map(|o| o.model)
}

/// Gradient descent from zero weights and the log-odds bias, recording the objective.
pub fn train_baseline_monitored(
    data: &FeatureDataset,
    settings: TrainSettings,
) -> Result<TrainOutcome, ClassifierError> {
    settings.validate()?;
    let pos = data.n_positive();
    if pos == 0 || pos == data.len() {
        return Err(ClassifierError::SingleClass);
    }
    let mut weights = vec![0.0; data.dim()];
    let mut bias = (pos as f64 / (data.len() - pos) as f64).ln();
    let mut history = Vec::with_capacity(settings.epochs + 1);
    for _ in 0..settings.epochs {
        let (loss, gw, gb) = loss_and_gradient(data, &weights, bias, settings.l2);
        history.push(loss);
        let gmax = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if gmax < settings.grad_tol {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= settings.learning_rate * g;
        }
        bias -= settings.learning_rate * gb;
    }
    if !(bias.is_finite() && weights.iter().all(|w| w.is_finite())) {
        return Err(ClassifierError::Diverged);
    }
    history.push(loss_and_gradient(data, &weights, bias, settings.l2).0);
    Ok(TrainOutcome {
        model: BaselineClassifier {
            weights,
            bias,
            settings,
        },
        loss_history: history,
    })
}

impl BaselineClassifier {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Probability-space scores with labels, groups and months carried through.
    pub fn score(&self, data: &FeatureDataset) -> Result<ScoreSet, ClassifierError> {
        if data.dim() != self.weights.len() {
            return Err(ClassifierError::Dimension {
                expected: self.weights.len(),
                found: data.dim(),
            });
        }
        let scores = data.rows().map(|x| sigmoid(self.margin(x))).collect();
        let set = ScoreSet::new(scores, data.labels().to_vec(), ScoreSpace::Probability)
            .and_then(|s| s.with_group(data.group().to_vec()))
            .and_then(|s| s.with_months(data.month().to_vec()))
            .expect("classifier output is a valid score set");
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(rows: &[([f64; 2], bool)]) -> FeatureDataset {
        FeatureDataset::new(
            2,
            rows.iter().flat_map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            vec!["g".into(); rows.len()],
            vec![1; rows.len()],
        )
        .unwrap()
    }

    #[test]
    fn separable_toy_is_fit() {
        let data = toy(&[
            ([-2.0, -1.0], false),
            ([-1.0, -1.5], false),
            ([-1.5, 0.5], false),
            ([0.5, -2.0], false),
            ([1.0, 1.0], true),
            ([2.0, 0.5], true),
            ([0.5, 2.0], true),
            ([1.5, 1.5], true),
        ]);
        let model = train_baseline(&data, TrainSettings::default()).unwrap();
        let scores = model.score(&data).unwrap();
        for (s, y) in scores.scores().iter().zip(scores.labels()) {
            assert_eq!(*s >= 0.5, *y);
        }
    }

    #[test]
    fn zero_model_scores_half() {
        let data = toy(&[([3.0, -1.0], true), ([0.0, 7.0], false)]);
        let model = BaselineClassifier {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            settings: TrainSettings::default(),
        };
        assert!(model.score(&data).unwrap().scores().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn single_class_and_dimension_errors() {
        let data = toy(&[([1.0, 0.0], true), ([0.0, 1.0], true)]);
        assert_eq!(
            train_baseline(&data, TrainSettings::default()),
            Err(ClassifierError::SingleClass)
        );
        let model = BaselineClassifier {
            weights: vec![0.0; 3],
            bias: 0.0,
            settings: TrainSettings::default(),
        };
        assert!(matches!(model.score(&data), Err(ClassifierError::Dimension { .. })));
    }
}
