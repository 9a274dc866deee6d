//! Recall of human-written criteria: for each human criterion, a judge model
//! decides whether the top-k generated criteria already entail it. Verdicts
//! are memoized per effective list so growing k never re-judges an already
//! entailed criterion, which also makes recall@k monotone in k by
//! construction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_json_object;
use crate::gateway::{Gateway, ModelParams};
use crate::model::{Criterion, CriteriaSet};
use crate::prompts;

/// Recall for one instruction at one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallOutcome {
    pub k: usize,
    /// Fraction of human criteria entailed by the top-k generated ones.
    pub value: f64,
    /// Per human criterion, in input order.
    pub verdicts: Vec<bool>,
    /// Human criteria whose judgement never produced usable JSON; they count
    /// as not entailed at this cutoff.
    pub flagged: Vec<String>,
}

/// Reads an entailment signal out of one JSON value: an explicit "yes", or
/// "entailed" not negated by "no"/"not". Works on raw words rather than
/// content tokens because negations matter here.
pub fn value_signals_entailment(value: &str) -> bool {
    let words: Vec<String> = value
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect();
    let has = |w: &str| words.iter().any(|x| x == w);
    if has("yes") {
        return true;
    }
    has("entailed") && !has("not") && !has("no")
}

pub struct RecallEvaluator<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
}

impl<'a> RecallEvaluator<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams) -> Self {
        RecallEvaluator { gateway, params }
    }

    /// One judgement of "does this generated list entail the human
    /// criterion", with a single JSON re-ask.
    fn judge_entailment(&self, rendered_list: &str, human: &str) -> Result<bool> {
        let prompt = prompts::recall_entailment(rendered_list, human);
        let reply = self.gateway.complete(&self.params.request(&prompt))?;
        let pairs = match parse_json_object(&reply) {
            Ok(pairs) => pairs,
            Err(_) => {
                let retry = prompts::with_reminder(&prompt, prompts::JSON_REMINDER);
                let reply = self.gateway.complete(&self.params.request(retry))?;
                parse_json_object(&reply)?
            }
        };
        Ok(pairs.iter().any(|(_, value)| value_signals_entailment(value)))
    }

    /// Recall at every cutoff in `ks` (deduplicated, ascending). Once a human
    /// criterion is entailed at some k it stays entailed at every larger k
    /// without further calls; identical effective lists share one verdict.
    pub fn recall_curve(
        &self,
        generated: &CriteriaSet,
        human: &[Criterion],
        ks: &[usize],
    ) -> Result<Vec<RecallOutcome>> {
        if human.is_empty() {
            return Err(Error::InvalidData {
                kind: "recall input",
                reason: format!("instruction '{}' has no human criteria", generated.instruction_id),
            });
        }
        let mut cutoffs: Vec<usize> = ks.to_vec();
        cutoffs.sort_unstable();
        cutoffs.dedup();
        let mut entailed_at: Vec<Option<usize>> = vec![None; human.len()];
        // (human index, effective list length) -> verdict, so a saturated
        // list is never judged twice.
        let mut memo: HashMap<(usize, usize), bool> = HashMap::new();
        let mut outcomes = Vec::with_capacity(cutoffs.len());
        for &k in &cutoffs {
            let top: Vec<&str> =
                generated.top_k(k).iter().map(|c| c.text.as_str()).collect();
            let effective = top.len();
            let rendered = prompts::render_numbered(&top);
            let mut verdicts = Vec::with_capacity(human.len());
            let mut flagged = Vec::new();
            for (idx, criterion) in human.iter().enumerate() {
                let verdict = if matches!(entailed_at[idx], Some(k0) if k0 <= k) {
                    true
                } else if effective == 0 {
                    false
                } else if let Some(&cached) = memo.get(&(idx, effective)) {
                    cached
                } else {
                    let verdict = match self.judge_entailment(&rendered, &criterion.text) {
                        Ok(v) => v,
                        Err(e) => {
                            log::warn!(
                                "entailment judgement failed for '{}' at k={k}: {e}",
                                criterion.text
                            );
                            flagged.push(criterion.text.clone());
                            false
                        }
                    };
                    memo.insert((idx, effective), verdict);
                    verdict
                };
                if verdict && entailed_at[idx].is_none() {
                    entailed_at[idx] = Some(k);
                }
                verdicts.push(verdict);
            }
            let entailed = verdicts.iter().filter(|v| **v).count();
            outcomes.push(RecallOutcome {
                k,
                value: entailed as f64 / human.len() as f64,
                verdicts,
                flagged,
            });
        }
        Ok(outcomes)
    }

    pub fn recall_at_k(
        &self,
        generated: &CriteriaSet,
        human: &[Criterion],
        k: usize,
    ) -> Result<RecallOutcome> {
        Ok(self.recall_curve(generated, human, &[k])?.remove(0))
    }
}

/// Mean recall across instructions.
pub fn dataset_recall(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}
