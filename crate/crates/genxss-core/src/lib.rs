//! Offline toolkit for generating obfuscated XSS payloads, testing them
//! against a ModSecurity-style rule engine, clustering the bypassing
//! payloads and iteratively synthesizing WAF rules with measured
//! precision/recall.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`corpus`] — payload domain types and the JSONL corpus store
//! * [`normalize`] — decoding/transformation primitives (`t:` chains)
//! * [`validate`] — static syntactic XSS validation
//! * [`vulnapp`] — embedded vulnerable echo application and reflection probe
//! * [`secrule`] — SecRule subset parser and request evaluation engine
//! * [`cluster`] — TF-IDF + Ward HAC and SequenceMatcher + DBSCAN pipelines
//! * [`llm`] — prompt builders, provider adapters and response parsers
//! * [`harness`] — WAF test driver and confusion-matrix metrics
//! * [`refine`] — feedback-driven rule refinement loop
//! * [`report`] — aggregated pipeline report

pub mod cluster;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod llm;
pub mod normalize;
pub mod refine;
pub mod report;
pub mod secrule;
pub mod validate;
pub mod vulnapp;

pub use error::Error;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
