//! Synthetic fraud-like datasets and a built-in baseline classifier.

mod classifier;
mod generator;

pub use classifier::{
    loss_and_gradient, train_baseline, train_baseline_monitored, BaselineClassifier,
    ClassifierError, TrainOutcome, TrainSettings,
};
pub use generator::{
    generate, loading, ramp_drift, GroupPair, SyntheticError, SyntheticSpec, Variant,
    DEFAULT_MONTH_WEIGHTS, DEFAULT_N_FEATURES, DEFAULT_PREVALENCE, DEFAULT_SEPARABILITY,
    MAJORITY, MINORITY, N_MONTHS,
};
