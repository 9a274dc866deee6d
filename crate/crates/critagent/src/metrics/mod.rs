//! Intrinsic lexical metrics over criteria: specificity (how rare a
//! criterion's strongest token is within a pool of criteria) and implicitness
//! (how little a criterion overlaps the instruction that produced it).
//!
//! Model-judged metrics live in the submodules: [`actionability`] drives a
//! draft/judge/edit loop, [`recall`] checks coverage of human-written
//! criteria, and [`report`] serializes everything as CSV.

pub mod actionability;
pub mod recall;
pub mod report;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::tokenize;

/// Guards the implicitness denominator against criteria with no content
/// tokens; small enough to never move a score by more than 1e-8.
pub const OVERLAP_EPSILON: f64 = 1e-8;

/// A reference pool of criterion texts with token occurrence counts. Counts
/// are multiset totals: a token repeated inside one criterion counts each
/// time.
#[derive(Debug, Clone)]
pub struct CriteriaPool {
    texts: Vec<String>,
    token_freq: BTreeMap<String, usize>,
}

impl CriteriaPool {
    pub fn build<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut token_freq = BTreeMap::new();
        for text in texts {
            for token in tokenize(text.as_ref()).tokens() {
                *token_freq.entry(token.clone()).or_insert(0) += 1;
            }
        }
        Ok(CriteriaPool {
            texts: texts.iter().map(|t| t.as_ref().to_string()).collect(),
            token_freq,
        })
    }

    /// Number of criteria in the pool.
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    /// Total occurrences of `token` across the pool, if it appears at all.
    pub fn frequency(&self, token: &str) -> Option<usize> {
        self.token_freq.get(token).copied()
    }
}

/// A specificity value plus the criterion tokens that never occur in the
/// pool. Out-of-pool tokens score as if they occurred once, which is the
/// maximum; callers may want to know the score rests on them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecificityScore {
    pub value: f64,
    pub out_of_pool: Vec<String>,
}

/// ln(1 + pool size) divided by the pool frequency of the criterion's rarest
/// content token (the maximum such quotient over its distinct tokens).
/// Undefined when the criterion has no content tokens at all.
pub fn specificity(pool: &CriteriaPool, criterion: &str) -> Result<SpecificityScore> {
    let bag = tokenize(criterion);
    if bag.is_empty() {
        return Err(Error::UndefinedSpecificity(criterion.to_string()));
    }
    let numerator = (1.0 + pool.len() as f64).ln();
    let mut best = f64::NEG_INFINITY;
    let mut out_of_pool = Vec::new();
    for token in bag.distinct() {
        let f_w = match pool.frequency(token) {
            Some(f) => f,
            None => {
                out_of_pool.push(token.to_string());
                1
            }
        };
        best = best.max(numerator / f_w as f64);
    }
    Ok(SpecificityScore { value: best, out_of_pool })
}

/// One minus the fraction of the criterion's distinct content tokens that
/// also appear in the instruction. 1.0 means the criterion shares no content
/// word with the instruction; 0.0 (up to epsilon) means every word of it was
/// already spelled out.
pub fn implicitness(instruction: &str, criterion: &str) -> f64 {
    let instruction_words = tokenize(instruction);
    let criterion_words = tokenize(criterion);
    let instruction_set = instruction_words.distinct();
    let criterion_set = criterion_words.distinct();
    let overlap = criterion_set.intersection(&instruction_set).count() as f64;
    1.0 - overlap / (criterion_set.len() as f64 + OVERLAP_EPSILON)
}
