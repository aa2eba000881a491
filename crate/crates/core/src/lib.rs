//! Meta-learning model selection for heterogeneous load-forecasting tasks.
//!
//! The crate is organized as a two-layer pipeline. The base layer runs a
//! tournament of ten candidate forecasters over repeated train/test splits of
//! each task and labels the task with the statistically best model. The meta
//! layer extracts a 16-dimensional feature vector per task, trains four
//! classifiers on `(features, label)` pairs, and combines their outputs
//! through calibrated scoring-voting to recommend ranked models for new
//! tasks.
//!
//! Modules follow the pipeline order:
//!
//! - [`series`]: time-series containers, CSV ingestion, resampling and
//!   causal train/test splitting
//! - [`features`]: the 16 task meta-features
//! - [`models`]: the candidate forecaster zoo (SARIMA, LSTM, SVR, SD) with a
//!   uniform fit/predict contract and error metrics
//! - [`labeling`]: repeated-split tournament with Pearson stopping
//! - [`meta`]: the four metalearner classifiers
//! - [`voting`]: score calibration and the scoring-voting combiner
//! - [`eval`]: corpus splitting and the benchmark harness
//! - [`taskgen`]: reproducible synthetic task corpora
//! - [`store`]: the persisted meta-knowledge store and corpus disk layout

pub mod error;
pub mod eval;
pub mod features;
pub mod labeling;
pub mod linalg;
pub mod meta;
pub mod models;
pub mod optim;
pub mod seed;
pub mod series;
pub mod store;
pub mod taskgen;
pub mod voting;

pub use error::{Error, Result};
pub use eval::{benchmark, eta, ser, split_corpus, BenchmarkReport, CorpusSplit, SerReport};
pub use labeling::{label_corpus, label_task, ErrorMatrix, LabeledCorpus, TaskLabel};
pub use meta::{ClassifierKind, MetaHyper, ScoreVector, TrainedClassifier};
pub use models::{ModelId, ZooConfig};
pub use series::{LfTask, LoadSeries, SplitPair, TaskRequirements, WeatherSeries};
pub use store::{
    align_tasks, benchmark_store, read_corpus, read_task, recommend, train_store, write_corpus,
    MetaKnowledgeStore, TrainOutcome, STORE_VERSION,
};
pub use taskgen::{generate_corpus, AggregationLevel, CorpusSpec, SynthProfileParams};
pub use voting::{fit_calibration, rank, vote, CalibrationCurve, Recommendation};
