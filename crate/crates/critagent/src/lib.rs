//! Mine expert web guidance for a writing task and distill it into a ranked
//! list of evaluation criteria, then measure how good those criteria are.
//!
//! Given an instruction like "write a fight scene for my fantasy novel", the
//! pipeline asks a model for conceptual search queries, retrieves and rates
//! expert advice pages, extracts per-document answers, folds them into
//! summaries, and rewrites the union into filtered, relevance-ranked
//! "the response should…" criteria. Simpler baseline generators (direct
//! instruction decomposition, open and fixed-size prompted checklists) and a
//! merged web+prompted variant share the same [`model::CriteriaSet`] output.
//!
//! Criteria quality is measured four ways: lexical [`metrics::specificity`]
//! and [`metrics::implicitness`], judged
//! [`metrics::actionability::actionability_suite`] (can an editor act on the
//! criterion), and judged [`metrics::recall`] against human-written criteria.
//!
//! The runnable examples are the best starting point:
//!
//! - `generate_criteria` — the full web pipeline on a recorded fixture
//!   bundle, printing every intermediate stage.
//! - `baseline_checklists` — the three baseline generators side by side.
//! - `lexical_metrics` — specificity and implicitness on a small pool.
//! - `actionability` — drafting, judging, editing, re-judging.
//! - `recall` — entailment-based recall against human criteria.
//! - `output_parsing` — the tolerant model-output parsers on messy replies.
//! - `write_demo_fixtures` — exports the recorded bundle to JSON for the CLI.
//! - `live_pipeline` — the same pipeline against real APIs (needs keys).
//!
//! The `critagent` binary wraps the same entry points as `generate`,
//! `metrics`, `report`, and `cache-stats` subcommands; see [`run`].
//!
//! All provider traffic goes through [`gateway::Gateway`], which adds
//! content-addressed disk caching, bounded retries, and a parallelism cap,
//! and which can be backed entirely by recorded fixtures for deterministic
//! offline runs.

pub mod baselines;
pub mod criteria;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod gateway;
pub mod jsonl;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod prompts;
pub mod querygen;
pub mod retrieval;
pub mod run;

pub use error::{Error, Result};
