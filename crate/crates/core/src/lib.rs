//! Evaluation and training of binary classifiers on class-imbalanced data.
//!
//! - [`dataset`]: CSV ingestion, stratified splits, re-proportioning.
//! - [`metrics`]: confusion-matrix metrics, ROC and PR curve areas.
//! - [`learners`]: logistic regression and random forest, grid search.
//! - [`resampling`]: upsample, downsample, SMOTE, UnderBagging and the
//!   balanced subsampler.
//! - [`ipip`]: ensembles of ensembles over balanced subsets with coverage
//!   guarantees for the minority class.
//! - [`uic`]: bias profiles against the minority proportion and the UIC
//!   aggregate metric; Wilcoxon signed-rank with Bonferroni.
//! - [`concordance`]: win ratios, metric agreement and the concordance SVG.
//! - [`experiment`]: the end-to-end experiment runner.

pub mod concordance;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod ipip;
pub mod learners;
pub mod metrics;
pub mod persist;
pub mod resampling;
pub mod seed;
pub mod stats;
pub mod uic;

pub use error::{Error, Result};
