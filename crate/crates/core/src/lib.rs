//! Directed adversarial-interaction analysis for political candidate corpora.
//!
//! The crate is organized as a pipeline:
//!
//! - [`corpus`]: data model, streaming ingestion, attention and tiers.
//! - [`party`]: per-user party preference from profile hashtags, retweets and
//!   friendship label propagation.
//! - [`toxicity`]: pluggable toxicity scorers and threshold calibration.
//! - [`dpp`]: directionality via party preference, per-candidate summaries.
//! - [`embeddings`]: tokenizer, vocabulary, co-occurrence, PPMI-SVD, kNN.
//! - [`lexicon`]: user-term graphs, seed pools, restart walks, bootstrap scores.
//! - [`stats`]: regression design and OLS with diagnostics.
//! - [`synth`]: synthetic corpora with planted ground truth.
//! - [`pipeline`]: resumable stages with a hashing manifest.

pub mod corpus;
pub mod dpp;
pub mod embeddings;
pub mod error;
pub mod lexicon;
pub mod party;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod toxicity;

pub use error::{Error, Result};
