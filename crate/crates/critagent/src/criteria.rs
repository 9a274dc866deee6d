//! Criteria generation: aggregate per-query advice, rewrite it into
//! checklist-style criteria, filter out criteria that cannot judge a single
//! static response, and rank what survives.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::{
    parse_advice_lines, parse_applies_verdict, parse_json_object, parse_numbered_list,
    parse_trailing_score,
};
use crate::gateway::{Gateway, ModelParams};
use crate::model::{Criterion, CriteriaSet, Instruction, Source, Stage};
use crate::prompts;
use crate::retrieval::QuerySummary;

/// The merged advice pool for one instruction, before rewriting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedAdvice {
    pub instruction_id: String,
    pub lines: Vec<String>,
    pub source_queries: Vec<String>,
}

pub struct CriteriaGenerator<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
    run_id: String,
    warnings: Mutex<Vec<String>>,
}

impl<'a> CriteriaGenerator<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams, run_id: impl Into<String>) -> Self {
        CriteriaGenerator {
            gateway,
            params,
            run_id: run_id.into(),
            warnings: Mutex::new(Vec::new()),
        }
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut self.warnings.lock().unwrap())
    }

    fn warn(&self, message: String) {
        log::warn!("{message}");
        self.warnings.lock().unwrap().push(message);
    }

    /// One completion with a single retry on failure; used by the fold stages
    /// where a lost call would abort a whole instruction.
    fn complete_with_retry(&self, prompt: &str) -> Result<String> {
        match self.gateway.complete(&self.params.request(prompt)) {
            Ok(reply) => Ok(reply),
            Err(first) => {
                log::warn!("fold completion failed, retrying once: {first}");
                self.gateway
                    .complete(&self.params.request(prompt))
                    .map_err(Into::into)
            }
        }
    }

    /// Left-fold across query summaries in query order: the first summary
    /// seeds the list, each further summary costs one aggregation completion
    /// (n summaries -> n-1 calls).
    pub fn aggregate_summaries(
        &self,
        instruction_id: &str,
        summaries: &[QuerySummary],
    ) -> Result<AggregatedAdvice> {
        if summaries.is_empty() {
            return Err(Error::StageFailed {
                stage: "aggregate",
                reason: "no query summaries to aggregate".into(),
            });
        }
        let mut lines = summaries[0].advice.clone();
        for next in &summaries[1..] {
            let prompt = prompts::aggregate_lists(
                &prompts::render_numbered(&lines),
                &prompts::render_numbered(&next.advice),
            );
            let merged = self.complete_with_retry(&prompt)?;
            let parsed = parse_advice_lines(&merged);
            if parsed.is_empty() {
                return Err(Error::StageFailed {
                    stage: "aggregate",
                    reason: "aggregation reply contained no list lines".into(),
                });
            }
            lines = parsed;
        }
        Ok(AggregatedAdvice {
            instruction_id: instruction_id.to_string(),
            lines,
            source_queries: summaries.iter().map(|s| s.query.text.clone()).collect(),
        })
    }

    /// Rewrites aggregated advice into checklist criteria. Lines that do not
    /// open with "the response should" are kept but flagged in provenance.
    pub fn rewrite_to_criteria(
        &self,
        advice: &AggregatedAdvice,
        instruction: &Instruction,
    ) -> Result<Vec<Criterion>> {
        let prompt = prompts::rewrite_criteria(
            &instruction.text,
            &prompts::render_numbered(&advice.lines),
        );
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let entries = parse_numbered_list(&reply)?;
        let criteria = entries
            .into_iter()
            .enumerate()
            .map(|(i, text)| {
                let conforming = text.to_lowercase().starts_with("the response should");
                let mut criterion = Criterion::new(text, Source::EaWeb)
                    .with_provenance(Stage::Aggregate, format!("advice:{}", advice.instruction_id))
                    .with_provenance(Stage::Rewrite, format!("item:{}", i + 1));
                if !conforming {
                    criterion = criterion
                        .with_provenance(Stage::Rewrite, "nonconforming: missing 'the response should' opener");
                }
                criterion
            })
            .collect();
        Ok(criteria)
    }

    /// Drops criteria the model marks as unusable for judging one static
    /// response. The reply is a JSON object keyed by 1-based criterion number
    /// whose values are reasoning strings ending in an applies-yes/no marker.
    /// JSON failures get one re-ask; persistent failure keeps everything
    /// (fail-open) with a warning. Per-criterion ambiguity also keeps.
    pub fn filter_criteria(
        &self,
        criteria: Vec<Criterion>,
        instruction: &Instruction,
    ) -> Result<Vec<Criterion>> {
        if criteria.is_empty() {
            return Err(Error::StageFailed { stage: "filter", reason: "no criteria to filter".into() });
        }
        let texts: Vec<&str> = criteria.iter().map(|c| c.text.as_str()).collect();
        let prompt = prompts::filter_criteria(&instruction.text, &prompts::render_numbered(&texts));
        let reply = self.gateway.complete(&self.params.request(&prompt))?;
        let pairs = match parse_json_object(&reply) {
            Ok(pairs) => pairs,
            Err(first_err) => {
                let retry_prompt = prompts::with_reminder(&prompt, prompts::JSON_REMINDER);
                match self
                    .gateway
                    .complete(&self.params.request(retry_prompt))
                    .map_err(Error::from)
                    .and_then(|r| parse_json_object(&r).map_err(Error::from))
                {
                    Ok(pairs) => pairs,
                    Err(second_err) => {
                        self.warn(format!(
                            "filter verdicts unusable ({first_err}; then {second_err}); keeping all {} criteria",
                            criteria.len()
                        ));
                        return Ok(criteria);
                    }
                }
            }
        };
        let mut kept = Vec::new();
        for (idx, criterion) in criteria.into_iter().enumerate() {
            let key = (idx + 1).to_string();
            let reasoning = pairs.iter().find(|(k, _)| k.trim() == key).map(|(_, v)| v.as_str());
            let verdict = reasoning.and_then(parse_applies_verdict);
            match verdict {
                Some(false) => continue,
                Some(true) => {
                    kept.push(criterion.with_provenance(Stage::Filter, "applies yes"));
                }
                None => {
                    self.warn(format!(
                        "no filter verdict for criterion {key}; keeping it (fail-open)"
                    ));
                    kept.push(criterion.with_provenance(Stage::Filter, "no verdict; kept fail-open"));
                }
            }
        }
        Ok(kept)
    }

    /// Ranks criteria by relevance 0-10, one completion per criterion, and
    /// returns them sorted descending with stable ties. A score that fails to
    /// parse degrades to 0 with a provenance note.
    pub fn rank_criteria(
        &self,
        criteria: Vec<Criterion>,
        instruction: &Instruction,
        method: Source,
    ) -> Result<CriteriaSet> {
        if criteria.is_empty() {
            // Upstream stages may legitimately whittle the list down to
            // nothing; an empty set ranks to an empty set without any calls.
            return Ok(CriteriaSet::new(&instruction.id, method, Vec::new(), &self.run_id));
        }
        let mut scored: Vec<Option<Criterion>> = vec![None; criteria.len()];
        let errors: Mutex<Option<Error>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for (slot, criterion) in scored.iter_mut().zip(criteria.into_iter()) {
                let errors = &errors;
                scope.spawn(move || {
                    let prompt = prompts::relevance_ranking(&instruction.text, &criterion.text);
                    match self.gateway.complete(&self.params.request(prompt)) {
                        Ok(reply) => {
                            let mut criterion = criterion;
                            match parse_trailing_score(&reply, 0, 10) {
                                Ok(score) => {
                                    criterion.rank_score = Some(score as f64);
                                    criterion = criterion
                                        .with_provenance(Stage::Rank, score.to_string());
                                }
                                Err(e) => {
                                    criterion.rank_score = Some(0.0);
                                    criterion = criterion.with_provenance(
                                        Stage::Rank,
                                        format!("score-parse-failed: {e}"),
                                    );
                                }
                            }
                            *slot = Some(criterion);
                        }
                        Err(e) => {
                            errors.lock().unwrap().get_or_insert(e.into());
                        }
                    }
                });
            }
        });
        if let Some(err) = errors.into_inner().unwrap() {
            return Err(err);
        }
        let mut ranked: Vec<Criterion> = scored.into_iter().flatten().collect();
        // Stable sort: equal scores keep their pre-rank order.
        ranked.sort_by(|a, b| {
            b.rank_score
                .unwrap_or(0.0)
                .partial_cmp(&a.rank_score.unwrap_or(0.0))
                .expect("rank scores are never NaN")
        });
        Ok(CriteriaSet::new(&instruction.id, method, ranked, &self.run_id))
    }

    /// Concatenates a web-derived set with a model-prompted set (no
    /// deduplication; near-duplicates are expected and kept) and re-ranks the
    /// union.
    pub fn merge_full(
        &self,
        ea_web: &CriteriaSet,
        llm_n: &CriteriaSet,
        instruction: &Instruction,
    ) -> Result<CriteriaSet> {
        if ea_web.instruction_id != llm_n.instruction_id {
            return Err(Error::InvalidData {
                kind: "criteria set",
                reason: format!(
                    "merge across instructions '{}' and '{}'",
                    ea_web.instruction_id, llm_n.instruction_id
                ),
            });
        }
        let expected = ea_web.criteria.len() + llm_n.criteria.len();
        let union: Vec<Criterion> = ea_web
            .criteria
            .iter()
            .map(|c| c.clone().with_provenance(Stage::Merge, "ea-web"))
            .chain(
                llm_n
                    .criteria
                    .iter()
                    .map(|c| c.clone().with_provenance(Stage::Merge, "llm-n")),
            )
            .map(|mut c| {
                c.rank_score = None; // re-ranked below
                c
            })
            .collect();
        let mut merged = self.rank_criteria(union, instruction, Source::EaFull)?;
        debug_assert_eq!(merged.criteria.len(), expected);
        merged.method = Source::EaFull;
        Ok(merged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::mock::MockChat;
    use crate::gateway::Gateway;
    use crate::querygen::ConceptualQuery;

    fn params() -> ModelParams {
        ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 512 }
    }

    fn instruction() -> Instruction {
        Instruction {
            id: "i1".into(),
            dataset: "demo".into(),
            text: "Write a poem about autumn".into(),
            human_criteria: vec![],
        }
    }

    fn summary(query: &str, advice: &[&str]) -> QuerySummary {
        QuerySummary {
            query: ConceptualQuery {
                text: query.into(),
                goal: String::new(),
                instruction_id: "i1".into(),
            },
            advice: advice.iter().map(|s| s.to_string()).collect(),
            sources: vec![],
        }
    }

    #[test]
    fn three_summaries_take_exactly_two_aggregate_calls() {
        let s1 = summary("q1", &["point one"]);
        let s2 = summary("q2", &["point two"]);
        let s3 = summary("q3", &["point three"]);
        let mut chat = MockChat::new();
        let p1 = prompts::aggregate_lists("1. point one", "1. point two");
        chat.stub(&params(), &p1, "1. point one\n2. point two");
        let p2 = prompts::aggregate_lists("1. point one\n2. point two", "1. point three");
        chat.stub(&params(), &p2, "1. point one\n2. point two\n3. point three");
        let log = chat.log();
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let advice = generator.aggregate_summaries("i1", &[s1, s2, s3]).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(advice.lines.len(), 3);
        assert_eq!(advice.source_queries, ["q1", "q2", "q3"]);
    }

    #[test]
    fn single_summary_aggregates_without_calls() {
        let chat = MockChat::new();
        let log = chat.log();
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let advice = generator
            .aggregate_summaries("i1", &[summary("q1", &["only point"])])
            .unwrap();
        assert!(log.is_empty());
        assert_eq!(advice.lines, ["only point"]);
    }

    #[test]
    fn rewrite_flags_nonconforming_lines() {
        let advice = AggregatedAdvice {
            instruction_id: "i1".into(),
            lines: vec!["use vivid imagery".into()],
            source_queries: vec!["q1".into()],
        };
        let instr = instruction();
        let mut chat = MockChat::new();
        let prompt = prompts::rewrite_criteria(&instr.text, "1. use vivid imagery");
        chat.stub(
            &params(),
            &prompt,
            "1. the response should use vivid imagery\n2. Ensure the poem rhymes",
        );
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let criteria = generator.rewrite_to_criteria(&advice, &instr).unwrap();
        assert_eq!(criteria.len(), 2);
        assert!(criteria[0].provenance.iter().all(|p| !p.reference.contains("nonconforming")));
        assert!(criteria[1]
            .provenance
            .iter()
            .any(|p| p.reference.contains("nonconforming")));
        assert!(criteria.iter().all(|c| c.source == Source::EaWeb));
    }

    fn filter_reply(verdicts: &[(usize, bool)]) -> String {
        let entries: Vec<String> = verdicts
            .iter()
            .map(|(i, keep)| {
                let marker = if *keep {
                    "therefore, the criteria applies yes"
                } else {
                    "therefore, the criteria does not apply no"
                };
                format!("\"{i}\": \"reasoning for {i}... {marker}\"")
            })
            .collect();
        format!("{{{}}}", entries.join(", "))
    }

    #[test]
    fn filter_keeps_subsequence_in_order() {
        let criteria: Vec<Criterion> = ["a", "b", "c", "d"]
            .iter()
            .map(|t| Criterion::new(format!("the response should {t}"), Source::EaWeb))
            .collect();
        let instr = instruction();
        let texts: Vec<&str> = criteria.iter().map(|c| c.text.as_str()).collect();
        let prompt = prompts::filter_criteria(&instr.text, &prompts::render_numbered(&texts));
        let mut chat = MockChat::new();
        chat.stub(
            &params(),
            &prompt,
            filter_reply(&[(1, true), (2, false), (3, true), (4, false)]),
        );
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let kept = generator.filter_criteria(criteria, &instr).unwrap();
        let texts: Vec<&str> = kept.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["the response should a", "the response should c"]);
    }

    #[test]
    fn filter_fails_open_on_persistent_json_failure() {
        let criteria = vec![Criterion::new("the response should x", Source::EaWeb)];
        let instr = instruction();
        let prompt = prompts::filter_criteria(&instr.text, "1. the response should x");
        let mut chat = MockChat::new();
        chat.stub(&params(), &prompt, "not json");
        chat.stub(
            &params(),
            &prompts::with_reminder(&prompt, prompts::JSON_REMINDER),
            "still not json",
        );
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let kept = generator.filter_criteria(criteria.clone(), &instr).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(generator.take_warnings().len(), 1);
    }

    #[test]
    fn filter_missing_verdict_keeps_criterion_with_warning() {
        let criteria: Vec<Criterion> = ["a", "b"]
            .iter()
            .map(|t| Criterion::new(format!("the response should {t}"), Source::EaWeb))
            .collect();
        let instr = instruction();
        let texts: Vec<&str> = criteria.iter().map(|c| c.text.as_str()).collect();
        let prompt = prompts::filter_criteria(&instr.text, &prompts::render_numbered(&texts));
        let mut chat = MockChat::new();
        chat.stub(&params(), &prompt, filter_reply(&[(1, true)])); // no entry for 2
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let kept = generator.filter_criteria(criteria, &instr).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(generator.take_warnings().len(), 1);
    }

    fn stub_rank(chat: &mut MockChat, instr: &Instruction, text: &str, score: i64) {
        let prompt = prompts::relevance_ranking(&instr.text, text);
        chat.stub(&params(), &prompt, format!("thinking... therefore, the score is: {score}"));
    }

    #[test]
    fn rank_sorts_descending_with_stable_ties() {
        let instr = instruction();
        let names = ["a", "b", "c", "d"];
        let scores = [3, 9, 9, 1];
        let mut chat = MockChat::new();
        for (name, score) in names.iter().zip(scores) {
            stub_rank(&mut chat, &instr, name, score);
        }
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let criteria: Vec<Criterion> =
            names.iter().map(|t| Criterion::new(*t, Source::EaWeb)).collect();
        let set = generator.rank_criteria(criteria, &instr, Source::EaWeb).unwrap();
        let order: Vec<&str> = set.criteria.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(order, ["b", "c", "a", "d"]);
        assert!(set.is_sorted_by_rank());
        assert_eq!(set.method, Source::EaWeb);
    }

    #[test]
    fn rank_parse_failure_degrades_to_zero_with_note() {
        let instr = instruction();
        let mut chat = MockChat::new();
        let prompt = prompts::relevance_ranking(&instr.text, "mystery");
        chat.stub(&params(), &prompt, "I cannot provide a numeric value");
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let set = generator
            .rank_criteria(vec![Criterion::new("mystery", Source::EaWeb)], &instr, Source::EaWeb)
            .unwrap();
        assert_eq!(set.criteria[0].rank_score, Some(0.0));
        assert!(set.criteria[0]
            .provenance
            .iter()
            .any(|p| p.reference.contains("score-parse-failed")));
    }

    #[test]
    fn merge_full_cardinality_is_additive() {
        let instr = instruction();
        let mut chat = MockChat::new();
        let web: Vec<Criterion> = (0..3)
            .map(|i| {
                let text = format!("the response should web {i}");
                stub_rank(&mut chat, &instr, &text, 5);
                Criterion::new(text, Source::EaWeb)
            })
            .collect();
        let prompted: Vec<Criterion> = (0..2)
            .map(|i| {
                let text = format!("the response should llm {i}");
                stub_rank(&mut chat, &instr, &text, (i % 10) as i64);
                Criterion::new(text, Source::LlmN)
            })
            .collect();
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let web_set = CriteriaSet::new("i1", Source::EaWeb, web, "run");
        let llm_set = CriteriaSet::new("i1", Source::LlmN, prompted, "run");
        let merged = generator.merge_full(&web_set, &llm_set, &instr).unwrap();
        assert_eq!(merged.criteria.len(), 5);
        assert_eq!(merged.method, Source::EaFull);
        assert!(merged.is_sorted_by_rank());
        // Sources of the constituents survive the merge.
        assert_eq!(merged.criteria.iter().filter(|c| c.source == Source::EaWeb).count(), 3);
        assert_eq!(merged.criteria.iter().filter(|c| c.source == Source::LlmN).count(), 2);
    }

    #[test]
    fn merge_with_empty_prompted_set_is_relabeled_web() {
        let instr = instruction();
        let mut chat = MockChat::new();
        stub_rank(&mut chat, &instr, "the response should web", 8);
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let web_set = CriteriaSet::new(
            "i1",
            Source::EaWeb,
            vec![Criterion::new("the response should web", Source::EaWeb)],
            "run",
        );
        let llm_set = CriteriaSet::new("i1", Source::LlmN, vec![], "run");
        let merged = generator.merge_full(&web_set, &llm_set, &instr).unwrap();
        assert_eq!(merged.criteria.len(), 1);
        assert_eq!(merged.method, Source::EaFull);
    }

    #[test]
    fn merge_rejects_mismatched_instructions() {
        let instr = instruction();
        let chat = MockChat::new();
        let gw = Gateway::builder().chat(chat).build();
        let generator = CriteriaGenerator::new(&gw, params(), "run");
        let a = CriteriaSet::new("i1", Source::EaWeb, vec![], "run");
        let b = CriteriaSet::new("i2", Source::LlmN, vec![], "run");
        assert!(generator.merge_full(&a, &b, &instr).is_err());
    }
}
