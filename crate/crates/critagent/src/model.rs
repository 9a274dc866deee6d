//! Core domain types shared by every pipeline stage, plus the canonical
//! tokenizer the lexical metrics are built on.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const STOPWORDS_SRC: &str = include_str!("../assets/stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_SRC
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word)
}

/// Lowercases, splits on every non-alphanumeric character, and drops empty
/// fragments and stopwords. Duplicates are kept: the result is a multiset.
pub fn tokenize(text: &str) -> TokenBag {
    let lowered = text.to_lowercase();
    let tokens = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .map(str::to_string)
        .collect();
    TokenBag { tokens }
}

/// A multiset of content tokens in order of appearance. Frequency counting
/// treats it as a bag; overlap computations use the distinct view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenBag {
    tokens: Vec<String>,
}

impl TokenBag {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for t in &self.tokens {
            *out.entry(t.as_str()).or_insert(0) += 1;
        }
        out
    }

    pub fn distinct(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// A writing task to be evaluated, optionally paired with human-authored
/// reference criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub id: String,
    pub dataset: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub human_criteria: Vec<Criterion>,
}

impl Instruction {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("instruction id is empty".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("instruction '{}' has empty text", self.id));
        }
        Ok(())
    }
}

/// Where a criterion came from. Doubles as the method label on a
/// [`CriteriaSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    EaWeb,
    Id,
    Llm,
    LlmN,
    Human,
    EaFull,
}

impl Source {
    /// Stable lowercase label used in CLI flags and file names.
    pub fn slug(&self) -> &'static str {
        match self {
            Source::EaWeb => "ea-web",
            Source::Id => "id",
            Source::Llm => "llm",
            Source::LlmN => "llm-n",
            Source::Human => "human",
            Source::EaFull => "ea-full",
        }
    }

    pub fn from_slug(s: &str) -> Option<Source> {
        match s {
            "ea-web" => Some(Source::EaWeb),
            "id" => Some(Source::Id),
            "llm" => Some(Source::Llm),
            "llm-n" => Some(Source::LlmN),
            "human" => Some(Source::Human),
            "ea-full" => Some(Source::EaFull),
            _ => None,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Pipeline stages a criterion can pass through, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Query,
    Url,
    Answer,
    Summary,
    Aggregate,
    Rewrite,
    Filter,
    Rank,
    Merge,
}

impl Stage {
    pub fn order(self) -> u8 {
        match self {
            Stage::Query => 0,
            Stage::Url => 1,
            Stage::Answer => 2,
            Stage::Summary => 3,
            Stage::Aggregate => 4,
            Stage::Rewrite => 5,
            Stage::Filter => 6,
            Stage::Rank => 7,
            Stage::Merge => 8,
        }
    }
}

/// One step in a criterion's derivation trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: Stage,
    #[serde(rename = "ref")]
    pub reference: String,
}

impl Provenance {
    pub fn new(stage: Stage, reference: impl Into<String>) -> Self {
        Provenance { stage, reference: reference.into() }
    }
}

/// True when the provenance chain only moves forward through the pipeline.
pub fn provenance_is_ordered(records: &[Provenance]) -> bool {
    records.windows(2).all(|w| w[0].stage.order() <= w[1].stage.order())
}

/// A single evaluation criterion ("the response should ...").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub text: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
    /// Pass-through slot for externally assigned scores (e.g. human utility
    /// annotations). Not produced by this crate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_scores: Option<BTreeMap<String, f64>>,
}

impl Criterion {
    pub fn new(text: impl Into<String>, source: Source) -> Self {
        Criterion {
            text: text.into(),
            source,
            rank_score: None,
            provenance: Vec::new(),
            external_scores: None,
        }
    }

    pub fn with_provenance(mut self, stage: Stage, reference: impl Into<String>) -> Self {
        self.provenance.push(Provenance::new(stage, reference));
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.text.trim().is_empty() {
            return Err("criterion text is empty".into());
        }
        if let Some(s) = self.rank_score {
            if !(0.0..=10.0).contains(&s) {
                return Err(format!("rank_score {s} outside [0, 10]"));
            }
        }
        if !provenance_is_ordered(&self.provenance) {
            return Err(format!("provenance out of pipeline order for '{}'", self.text));
        }
        Ok(())
    }
}

/// The criteria one method produced for one instruction. When the method
/// ranks, criteria are sorted by `rank_score` descending with stable ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaSet {
    pub instruction_id: String,
    pub method: Source,
    pub criteria: Vec<Criterion>,
    pub run_id: String,
}

impl CriteriaSet {
    pub fn new(
        instruction_id: impl Into<String>,
        method: Source,
        criteria: Vec<Criterion>,
        run_id: impl Into<String>,
    ) -> Self {
        CriteriaSet {
            instruction_id: instruction_id.into(),
            method,
            criteria,
            run_id: run_id.into(),
        }
    }

    pub fn is_sorted_by_rank(&self) -> bool {
        self.criteria
            .windows(2)
            .all(|w| w[0].rank_score.unwrap_or(0.0) >= w[1].rank_score.unwrap_or(0.0))
    }

    /// The `k` highest-ranked criteria (all of them when `k` exceeds the set).
    pub fn top_k(&self, k: usize) -> &[Criterion] {
        &self.criteria[..k.min(self.criteria.len())]
    }

    pub fn validate(&self) -> Result<(), String> {
        for c in &self.criteria {
            c.validate()?;
        }
        let ranked = self.criteria.iter().any(|c| c.rank_score.is_some());
        if ranked && !self.is_sorted_by_rank() {
            return Err(format!(
                "ranked criteria for '{}' are not sorted descending",
                self.instruction_id
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_drops_stopwords() {
        let bag = tokenize("The response should be a poem about autumn");
        assert_eq!(bag.tokens(), ["response", "poem", "autumn"]);
    }

    #[test]
    fn tokenize_splits_on_every_non_alphanumeric_boundary() {
        let bag = tokenize("sleep-deprivation impacts sleep");
        assert_eq!(bag.tokens(), ["sleep", "deprivation", "impacts", "sleep"]);
        assert_eq!(bag.counts()["sleep"], 2);
    }

    #[test]
    fn tokenize_drops_empty_fragments() {
        let bag = tokenize("  --  cite,, sources!! ");
        assert_eq!(bag.tokens(), ["cite", "sources"]);
    }

    #[test]
    fn tokenize_of_empty_and_all_stopword_text_is_empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("the of a an").is_empty());
    }

    #[test]
    fn tokenize_is_idempotent_on_joined_output() {
        let bag = tokenize("Write a poem; about AUTUMN's end!");
        let again = tokenize(&bag.joined());
        assert_eq!(bag, again);
    }

    #[test]
    fn distinct_view_collapses_duplicates() {
        let bag = tokenize("sleep sleep sleep");
        assert_eq!(bag.len(), 3);
        assert_eq!(bag.distinct().len(), 1);
    }

    #[test]
    fn source_slug_roundtrip() {
        for s in [Source::EaWeb, Source::Id, Source::Llm, Source::LlmN, Source::Human, Source::EaFull] {
            assert_eq!(Source::from_slug(s.slug()), Some(s));
        }
        assert_eq!(Source::from_slug("nope"), None);
    }

    #[test]
    fn source_serializes_to_upper_snake_labels() {
        assert_eq!(serde_json::to_string(&Source::EaWeb).unwrap(), "\"EA_WEB\"");
        assert_eq!(serde_json::to_string(&Source::LlmN).unwrap(), "\"LLM_N\"");
    }

    #[test]
    fn provenance_order_check() {
        let ok = vec![
            Provenance::new(Stage::Aggregate, "agg"),
            Provenance::new(Stage::Rewrite, "item:1"),
            Provenance::new(Stage::Rank, "7"),
        ];
        assert!(provenance_is_ordered(&ok));
        let bad = vec![
            Provenance::new(Stage::Rank, "7"),
            Provenance::new(Stage::Rewrite, "item:1"),
        ];
        assert!(!provenance_is_ordered(&bad));
    }

    #[test]
    fn criterion_rank_score_bounds_enforced() {
        let mut c = Criterion::new("the response should be vivid", Source::EaWeb);
        c.rank_score = Some(10.0);
        assert!(c.validate().is_ok());
        c.rank_score = Some(10.5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn criteria_set_sort_invariant() {
        let mut a = Criterion::new("a", Source::EaWeb);
        a.rank_score = Some(9.0);
        let mut b = Criterion::new("b", Source::EaWeb);
        b.rank_score = Some(4.0);
        let set = CriteriaSet::new("i1", Source::EaWeb, vec![a.clone(), b.clone()], "run");
        assert!(set.validate().is_ok());
        let bad = CriteriaSet::new("i1", Source::EaWeb, vec![b, a], "run");
        assert!(bad.validate().is_err());
    }

    #[test]
    fn top_k_clamps_to_available() {
        let set = CriteriaSet::new(
            "i1",
            Source::Llm,
            vec![Criterion::new("x", Source::Llm)],
            "run",
        );
        assert_eq!(set.top_k(5).len(), 1);
        assert_eq!(set.top_k(0).len(), 0);
    }

    #[test]
    fn stopword_list_contains_function_words_only() {
        for w in ["the", "should", "be", "a", "about", "is", "how"] {
            assert!(is_stopword(w), "{w} should be a stopword");
        }
        for w in ["response", "poem", "write", "autumn", "cite", "sources", "clear", "engaging"] {
            assert!(!is_stopword(w), "{w} must not be a stopword");
        }
    }
}
