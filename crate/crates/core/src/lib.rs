//! Probability calibration for binary classifiers, with frozen decision
//! thresholds that stay fixed while the underlying model is retrained.
pub mod calibrators;
pub mod cli;
pub mod decision_policy;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod score_data;
pub mod seeds;
pub mod synthetic;
