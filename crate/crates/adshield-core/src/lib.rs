//! Toolkit for detecting LLM-generated native advertisements in RAG responses
//! and for measuring how robust those detectors are when advertisers change
//! their advertising style or the generating LLM.
//!
//! The crate is organised around the stages of an ad-blocking experiment:
//!
//! - [`corpus`] — the canonical data model (responses, ad annotations, splits)
//!   plus ingestion, validation and variant test-set assembly.
//! - [`text`] — deterministic tokenization and sentence segmentation.
//! - [`features`] — vocabularies, mutual-information term selection, binary
//!   bag-of-words and mean-embedding vectors, dictionary scoring.
//! - [`classify`] — the lightweight response-level detectors (random forest,
//!   linear margin model with Platt calibration, dictionary threshold) and
//!   the any-sentence aggregation rule.
//! - [`tagger`] — a token-level BIO tagger that localizes the ad (item,
//!   advertiser, other ad text) inside a response.
//! - [`evaluate`] — entity extraction and entity/response-level scoring,
//!   contingency construction between paired test sets.
//! - [`stats`] — odds ratios with Wald intervals, Benjamini-Hochberg FDR
//!   control, Jaccard overlap of false-negative sets.
//! - [`evasion`] — the 2x2 advertising-style taxonomy, prompt rendering and
//!   batch regeneration of restyled ad responses through an LLM client.
//! - [`synth`] — deterministic synthetic corpora used by tests, benchmarks
//!   and the bundled fixture.

pub mod classify;
pub mod corpus;
pub mod evaluate;
pub mod evasion;
pub mod features;
pub mod stats;
pub mod synth;
pub mod tagger;
pub mod text;
