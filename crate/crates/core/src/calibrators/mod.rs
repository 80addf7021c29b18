//! Post-hoc calibration transforms for binary classifier scores.
//!
//! Every fitted [`Calibrator`] maps a raw score to a probability. Isotonic,
//! temperature and beta maps are nondecreasing in the score; a Platt map is
//! nondecreasing when its slope `A` is non-positive. Platt and temperature scaling operate on
//! logits, so probability inputs are first mapped through [`to_logit`].
//! Isotonic regression works on the raw score directly and beta calibration
//! on probabilities.

mod beta;
mod isotonic;
mod logistic;
mod platt;
mod temperature;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use beta::{beta_nll, fit_beta, BetaParams, BETA_COEF_CAP};
pub use isotonic::{fit_isotonic, isotonic_fit_values, IsotonicModel};
pub use platt::{fit_platt, platt_objective, platt_start, PlattParams, PLATT_PARAM_CAP};
pub use temperature::{
    fit_temperature, temperature_nll, TemperatureParams, MAX_TEMPERATURE, MIN_TEMPERATURE,
};

use crate::score_data::{DataError, ScoreSet, ScoreSpace};

pub use logistic::sigmoid;

/// Probabilities are clamped to `[EPS, 1 − EPS]` wherever a logarithm is taken.
pub const PROBABILITY_EPS: f64 = 1e-12;

pub const CALIBRATOR_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("fitting set contains a single class")]
    SingleClass,
    #[error("fitting set is empty")]
    Empty,
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("score {0} is outside [0, 1] for a probability-space calibrator")]
    OutOfSpace(f64),
    #[error("unknown calibration method `{0}`")]
    UnknownMethod(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema version {found} is not supported (expected {CALIBRATOR_SCHEMA_VERSION})")]
    SchemaVersion { found: u64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T, E = CalibrationError> = std::result::Result<T, E>;

pub(crate) fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)
}

/// `ln(p' / (1 − p'))` with `p'` clamped away from 0 and 1.
pub fn to_logit(p: f64) -> f64 {
    let p = clamp_probability(p);
    p.ln() - (-p).ln_1p()
}

/// Scores of `val` in logit space.
pub(crate) fn input_logits(val: &ScoreSet) -> Vec<f64> {
    match val.score_space() {
        ScoreSpace::Margin => val.scores().to_vec(),
        ScoreSpace::Probability => val.scores().iter().map(|&p| to_logit(p)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Identity,
    Platt,
    Isotonic,
    Temperature,
    Beta,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Identity,
        Method::Temperature,
        Method::Platt,
        Method::Isotonic,
        Method::Beta,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Platt => "platt",
            Method::Isotonic => "isotonic",
            Method::Temperature => "temperature",
            Method::Beta => "beta",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "none" => Ok(Method::Identity),
            "platt" | "sigmoid" => Ok(Method::Platt),
            "isotonic" => Ok(Method::Isotonic),
            "temperature" => Ok(Method::Temperature),
            "beta" => Ok(Method::Beta),
            other => Err(CalibrationError::UnknownMethod(other.to_string())),
        }
    }
}

/// Fitted parameters, tagged by method.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationModel {
    Identity,
    Platt(PlattParams),
    Isotonic(IsotonicModel),
    Temperature(TemperatureParams),
    Beta(BetaParams),
}

impl CalibrationModel {
    pub fn method(&self) -> Method {
        match self {
            CalibrationModel::Identity => Method::Identity,
            CalibrationModel::Platt(_) => Method::Platt,
            CalibrationModel::Isotonic(_) => Method::Isotonic,
            CalibrationModel::Temperature(_) => Method::Temperature,
            CalibrationModel::Beta(_) => Method::Beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub platt_smoothing: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            platt_smoothing: true,
        }
    }
}

/// A fitted transform together with the score space it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrator {
    model: CalibrationModel,
    score_space: ScoreSpace,
}

impl Calibrator {
    pub fn new(model: CalibrationModel, score_space: ScoreSpace) -> Self {
        Self { model, score_space }
    }

    pub fn identity(score_space: ScoreSpace) -> Self {
        Self::new(CalibrationModel::Identity, score_space)
    }

    /// Fits `method` on a validation set.
    pub fn fit(method: Method, val: &ScoreSet, opts: FitOptions) -> Result<Self> {
        let model = match method {
            Method::Identity => CalibrationModel::Identity,
            Method::Platt => CalibrationModel::Platt(fit_platt(val, opts.platt_smoothing)?),
            Method::Isotonic => CalibrationModel::Isotonic(fit_isotonic(val)?),
            Method::Temperature => CalibrationModel::Temperature(fit_temperature(val)?),
            Method::Beta => CalibrationModel::Beta(fit_beta(val)?),
        };
        Ok(Self::new(model, val.score_space()))
    }

    pub fn model(&self) -> &CalibrationModel {
        &self.model
    }

    pub fn method(&self) -> Method {
        self.model.method()
    }

    pub fn score_space(&self) -> ScoreSpace {
        self.score_space
    }

    /// Calibrated probability for one raw score.
    pub fn apply(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(CalibrationError::NonFinite(s));
        }
        if self.score_space == ScoreSpace::Probability && !(0.0..=1.0).contains(&s) {
            return Err(CalibrationError::OutOfSpace(s));
        }
        let logit = || match self.score_space {
            ScoreSpace::Probability => to_logit(s),
            ScoreSpace::Margin => s,
        };
        let p = match &self.model {
            CalibrationModel::Identity => match self.score_space {
                ScoreSpace::Probability => s,
                ScoreSpace::Margin => sigmoid(s),
            },
            CalibrationModel::Platt(p) => p.apply(logit()),
            CalibrationModel::Isotonic(m) => m.apply(s),
            CalibrationModel::Temperature(t) => t.apply(logit()),
            CalibrationModel::Beta(b) => match self.score_space {
                ScoreSpace::Probability => b.apply(s),
                ScoreSpace::Margin => b.apply(sigmoid(s)),
            },
        };
        Ok(p)
    }

    /// Applies the calibrator to every row, returning a probability-space set.
    pub fn apply_set(&self, set: &ScoreSet) -> Result<ScoreSet> {
        let scores = set
            .scores()
            .iter()
            .map(|&s| self.apply(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(set.with_scores(scores, ScoreSpace::Probability)?)
    }

    pub fn to_json(&self) -> Value {
        let params = match &self.model {
            CalibrationModel::Identity => json!({}),
            CalibrationModel::Platt(p) => json!(p),
            CalibrationModel::Isotonic(m) => json!(m),
            CalibrationModel::Temperature(t) => json!(t),
            CalibrationModel::Beta(b) => json!(b),
        };
        json!({
            "schema_version": CALIBRATOR_SCHEMA_VERSION,
            "method": self.method(),
            "params": params,
            "score_space": self.score_space,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| CalibrationError::Schema("calibrator document is not an object".into()))?;
        let version = obj
            .get("schema_version")
            .ok_or_else(|| CalibrationError::Schema("missing field `schema_version`".into()))?
            .as_u64()
            .ok_or_else(|| CalibrationError::Schema("`schema_version` is not an integer".into()))?;
        if version != CALIBRATOR_SCHEMA_VERSION as u64 {
            return Err(CalibrationError::SchemaVersion { found: version });
        }
        let method: Method = obj
            .get("method")
            .and_then(Value::as_str)
            .ok_or_else(|| CalibrationError::Schema("missing field `method`".into()))?
            .parse()?;
        let score_space: ScoreSpace = obj
            .get("score_space")
            .and_then(Value::as_str)
            .ok_or_else(|| CalibrationError::Schema("missing field `score_space`".into()))?
            .parse()
            .map_err(CalibrationError::Schema)?;
        let params = obj
            .get("params")
            .cloned()
            .ok_or_else(|| CalibrationError::Schema("missing field `params`".into()))?;

        fn decode<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
            serde_json::from_value(v).map_err(|e| CalibrationError::Schema(e.to_string()))
        }
        let model = match method {
            Method::Identity => CalibrationModel::Identity,
            Method::Platt => {
                let p: PlattParams = decode(params)?;
                CalibrationModel::Platt(PlattParams::new(p.a, p.b)?)
            }
            Method::Isotonic => {
                #[derive(Deserialize)]
                struct Raw {
                    breakpoints: Vec<f64>,
                    values: Vec<f64>,
                }
                let raw: Raw = decode(params)?;
                CalibrationModel::Isotonic(IsotonicModel::new(raw.breakpoints, raw.values)?)
            }
            Method::Temperature => {
                let t: TemperatureParams = decode(params)?;
                CalibrationModel::Temperature(TemperatureParams::new(t.t)?)
            }
            Method::Beta => {
                let b: BetaParams = decode(params)?;
                CalibrationModel::Beta(BetaParams::new(b.a, b.b, b.c)?)
            }
        };
        Ok(Self::new(model, score_space))
    }
}

pub fn save_calibrator(c: &Calibrator, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&c.to_json()).expect("json values serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CalibrationError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_calibrator(path: impl AsRef<Path>) -> Result<Calibrator> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CalibrationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| CalibrationError::Schema(e.to_string()))?;
    Calibrator::from_json(&doc)
}
