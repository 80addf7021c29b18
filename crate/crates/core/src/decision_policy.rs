//! Frozen decision thresholds.
//!
//! A [`ThresholdPolicy`] is chosen once, on the first model's calibrated
//! validation scores, and then applied unchanged to every later model.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::score_data::{ScoreSet, ScoreSpace};

pub const POLICY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("selection set has no positive labels")]
    NoPositives,
    #[error("target recall {0} must lie in (0, 1]")]
    InvalidTarget(f64),
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("threshold is not finite")]
    NonFiniteThreshold,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema version {found} is not supported (expected {POLICY_SCHEMA_VERSION})")]
    SchemaVersion { found: u64 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = PolicyError> = std::result::Result<T, E>;

/// Where a threshold came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySource {
    pub bootstrap: u32,
    pub method: String,
    pub variant: String,
}

impl Default for PolicySource {
    fn default() -> Self {
        Self {
            bootstrap: 0,
            method: "unspecified".into(),
            variant: "unspecified".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub threshold: f64,
    pub target_recall: f64,
    pub source: PolicySource,
    pub score_space: ScoreSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    /// Flagged as fraud.
    Reject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Approve => "approve",
            Decision::Reject => "reject",
        })
    }
}

fn check_target(target_recall: f64) -> Result<()> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(PolicyError::InvalidTarget(target_recall));
    }
    Ok(())
}

/// Largest observed positive-class score whose recall reaches `target_recall`.
pub fn select_threshold(
    val: &ScoreSet,
    target_recall: f64,
    source: PolicySource,
) -> Result<ThresholdPolicy> {
    check_target(target_recall)?;
    let mut pos: Vec<f64> = val
        .scores()
        .iter()
        .zip(val.labels())
        .filter_map(|(&s, &y)| y.then_some(s))
        .collect();
    if pos.is_empty() {
        return Err(PolicyError::NoPositives);
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    let n = pos.len() as f64;

    // Walk distinct values downward; recall at value v counts every positive >= v.
    let mut threshold = *pos.last().expect("non-empty");
    let mut k = 0;
    while k < pos.len() {
        let v = pos[k];
        while k < pos.len() && pos[k] == v {
            k += 1;
        }
        if k as f64 / n >= target_recall {
            threshold = v;
            break;
        }
    }
    if !threshold.is_finite() {
        return Err(PolicyError::NonFiniteThreshold);
    }
    Ok(ThresholdPolicy {
        threshold,
        target_recall,
        source,
        score_space: val.score_space(),
    })
}

impl ThresholdPolicy {
    /// Rejects iff `score >= threshold`.
    pub fn decide(&self, score: f64) -> Result<Decision> {
        if !score.is_finite() {
            return Err(PolicyError::NonFinite(score));
        }
        Ok(if score >= self.threshold {
            Decision::Reject
        } else {
            Decision::Approve
        })
    }

    pub fn decide_all(&self, scores: &[f64]) -> Result<Vec<Decision>> {
        scores.iter().map(|&s| self.decide(s)).collect()
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "schema_version": POLICY_SCHEMA_VERSION,
            "threshold": self.threshold,
            "target_recall": self.target_recall,
            "source": self.source,
            "score_space": self.score_space,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let version = doc
            .get("schema_version")
            .ok_or_else(|| PolicyError::Schema("missing field `schema_version`".into()))?
            .as_u64()
            .ok_or_else(|| PolicyError::Schema("`schema_version` is not an integer".into()))?;
        if version != POLICY_SCHEMA_VERSION as u64 {
            return Err(PolicyError::SchemaVersion { found: version });
        }
        #[derive(Deserialize)]
        struct Raw {
            threshold: f64,
            target_recall: f64,
            source: PolicySource,
            #[serde(default)]
            score_space: ScoreSpace,
        }
        let raw: Raw =
            serde_json::from_value(doc.clone()).map_err(|e| PolicyError::Schema(e.to_string()))?;
        check_target(raw.target_recall)?;
        if !raw.threshold.is_finite() {
            return Err(PolicyError::NonFiniteThreshold);
        }
        Ok(Self {
            threshold: raw.threshold,
            target_recall: raw.target_recall,
            source: raw.source,
            score_space: raw.score_space,
        })
    }
}

/// Decides a single score against a policy.
pub fn decide(policy: &ThresholdPolicy, score: f64) -> Result<Decision> {
    policy.decide(score)
}

pub fn save_policy(policy: &ThresholdPolicy, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&policy.to_json()).expect("json values serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| PolicyError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<ThresholdPolicy> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| PolicyError::Schema(e.to_string()))?;
    ThresholdPolicy::from_json(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::confusion_at;

    fn prob(scores: Vec<f64>, labels: &[u8]) -> ScoreSet {
        ScoreSet::from_binary(scores, labels, ScoreSpace::Probability).unwrap()
    }

    fn select(set: &ScoreSet, target: f64) -> f64 {
        select_threshold(set, target, PolicySource::default())
            .unwrap()
            .threshold
    }

    #[test]
    fn separated_case() {
        let set = prob(vec![0.9, 0.9, 0.1, 0.1], &[1, 1, 0, 0]);
        assert_eq!(select(&set, 0.95), 0.9);
    }

    #[test]
    fn five_row_case() {
        let set = prob(vec![0.9, 0.8, 0.7, 0.6, 0.5], &[1, 1, 0, 1, 0]);
        let t = select(&set, 0.95);
        assert_eq!(t, 0.6);
        let c = confusion_at(&set, t);
        assert_eq!(c.recall(), Some(1.0));
        assert_eq!(c.precision(), Some(0.75));
        assert_eq!(confusion_at(&set, 0.7).recall(), Some(2.0 / 3.0));
    }

    #[test]
    fn full_recall_is_min_positive() {
        let set = prob(vec![0.4, 0.8, 0.3, 0.6, 0.1], &[1, 1, 0, 1, 0]);
        assert_eq!(select(&set, 1.0), 0.4);
    }

    #[test]
    fn errors() {
        let set = prob(vec![0.4, 0.3], &[0, 0]);
        assert!(matches!(
            select_threshold(&set, 0.9, PolicySource::default()),
            Err(PolicyError::NoPositives)
        ));
        let set = prob(vec![0.4, 0.3], &[1, 0]);
        for bad in [0.0, 1.5, f64::NAN] {
            assert!(matches!(
                select_threshold(&set, bad, PolicySource::default()),
                Err(PolicyError::InvalidTarget(_))
            ));
        }
    }

    #[test]
    fn reject_on_tie() {
        let p = ThresholdPolicy {
            threshold: 0.5,
            target_recall: 0.95,
            source: PolicySource::default(),
            score_space: ScoreSpace::Probability,
        };
        assert_eq!(p.decide(0.5).unwrap(), Decision::Reject);
        assert_eq!(decide(&p, 0.0).unwrap(), Decision::Approve);
        assert!(matches!(p.decide(f64::NAN), Err(PolicyError::NonFinite(_))));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let p = ThresholdPolicy {
            threshold: 0.123_456_789_012_345_67,
            target_recall: 0.95,
            source: PolicySource {
                bootstrap: 0,
                method: "beta".into(),
                variant: "v".into(),
            },
            score_space: ScoreSpace::Probability,
        };
        let doc = p.to_json();
        assert_eq!(ThresholdPolicy::from_json(&doc).unwrap(), p);
        let mut missing = doc.clone();
        missing.as_object_mut().unwrap().remove("schema_version");
        assert!(matches!(
            ThresholdPolicy::from_json(&missing),
            Err(PolicyError::Schema(_))
        ));
        let mut wrong = doc;
        wrong["schema_version"] = serde_json::json!(2);
        assert!(matches!(
            ThresholdPolicy::from_json(&wrong),
            Err(PolicyError::SchemaVersion { found: 2 })
        ));
    }
}
