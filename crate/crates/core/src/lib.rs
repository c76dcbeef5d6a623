//! Fairness auditing for binary decisions over tabular data.
//!
//! The crate measures group disparities from the decision/sensitive
//! contingency table, attaches confidence intervals, compares per-group
//! confusion matrices, probes individual decisions by swapping the sensitive
//! attribute, and repairs numeric features by moving each group's
//! distribution toward a common quantile barycenter. A small logistic
//! regression learner is included so every pipeline runs end to end.

pub mod audit;
pub mod data;
pub mod error;
pub mod explain;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod repair;
pub mod rng;
pub mod stats;
pub mod synth;

pub use data::{split, validate, Column, ColumnRole, Dataset, Schema, ValidationReport, Values};
pub use error::{Error, Result};
pub use rng::CounterRng;
