//! Price-direction forecasting laboratory.
//!
//! The pipeline runs in five stages, each its own module:
//!
//! 1. [`market_data`] — OHLC ingestion, up/down labels, chronological
//!    splits, min-max normalization.
//! 2. [`indicators`] — the nine technical indicators and the continuous
//!    feature matrix.
//! 3. [`discretize`] — trend rules mapping each indicator column to ±1.
//! 4. [`classifiers`] / [`svm`] — from-scratch MLP, Naive Bayes, random
//!    forest, logistic regression, and an SMO-trained SVM behind one
//!    prediction contract.
//! 5. [`metrics`] / [`experiment`] — confusion statistics, probability
//!    errors, ROC AUC, paired t-tests, grid search, the 10x10 validation
//!    protocol, and report emission.
//!
//! Everything is deterministic: a master seed plus the input data fixes
//! every trained weight and every report byte.

pub mod classifiers;
pub mod discretize;
pub mod experiment;
pub mod indicators;
pub mod market_data;
pub mod metrics;
pub mod svm;
pub mod synthetic;

pub use classifiers::TrainedModel;
pub use indicators::{FeatureMatrix, IndicatorConfig, NUM_INDICATORS};
pub use market_data::{DatasetSplit, LabeledDataset, OhlcBar, PriceSeries};
