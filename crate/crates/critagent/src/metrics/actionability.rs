//! The draft/judge/edit loop: draft one response to the instruction, judge it
//! against every criterion, targeted-edit each failure, and re-judge the
//! edits. A criterion is actionable when the edit it prompted turns a fail
//! into a pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_binary_verdict;
use crate::gateway::{Gateway, ModelParams};
use crate::model::{Criterion, Instruction};
use crate::prompts;

/// Judges whether a response satisfies a criterion, and produces targeted
/// edits for responses that do not.
pub struct Judge<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
}

impl<'a> Judge<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams) -> Self {
        Judge { gateway, params }
    }

    /// Yes/no verdict with one re-ask when the reply lacks the verdict
    /// marker. A second miss is a hard judge failure.
    pub fn satisfaction(
        &self,
        instruction: &str,
        response: &str,
        criterion: &str,
    ) -> Result<bool> {
        let prompt = prompts::satisfaction(instruction, response, criterion);
        let reply = self.gateway.complete(&self.params.request(&prompt))?;
        match parse_binary_verdict(&reply) {
            Ok(verdict) => Ok(verdict),
            Err(first) => {
                let retry = prompts::with_reminder(&prompt, prompts::VERDICT_REMINDER);
                let reply = self.gateway.complete(&self.params.request(retry))?;
                parse_binary_verdict(&reply).map_err(|second| Error::JudgeFailed {
                    criterion: criterion.to_string(),
                    reason: format!("{first}; after reminder: {second}"),
                })
            }
        }
    }

    /// Minimal rewrite of `response` so that it meets `criterion`.
    pub fn edit(&self, instruction: &str, response: &str, criterion: &str) -> Result<String> {
        let prompt = prompts::edit_response(instruction, response, criterion);
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let edited = reply.trim();
        if edited.is_empty() {
            return Err(Error::EditFailed {
                criterion: criterion.to_string(),
                reason: "empty edit reply".into(),
            });
        }
        Ok(edited.to_string())
    }
}

/// Per-criterion outcome of the loop. `edited_pass` is only present when the
/// initial response failed and an edit was judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionabilityRecord {
    pub criterion: String,
    pub initial_pass: bool,
    pub edited_pass: Option<bool>,
    /// 1 when an edit turned a fail into a pass, otherwise 0.
    pub delta: i8,
    /// The edit request itself failed, so the criterion counts as judged but
    /// un-actioned.
    pub edit_failed: bool,
}

/// A criterion the judge could not produce a verdict for even after a
/// reminder; it is excluded from every rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCriterion {
    pub criterion: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionabilityAggregates {
    /// Fraction of judged criteria the initial draft already satisfied.
    pub initial_pass_rate: f64,
    /// Fraction satisfied after edits (initial passes carry over).
    pub edited_pass_rate: f64,
    /// edited_pass_rate - initial_pass_rate.
    pub delta: f64,
    /// Among criteria the draft failed, the fraction whose edit flipped them
    /// to a pass. None when the draft failed nothing.
    pub actionability: Option<f64>,
    pub judged: usize,
    pub excluded: usize,
}

impl ActionabilityAggregates {
    pub fn from_records(records: &[ActionabilityRecord], excluded: usize) -> Self {
        let judged = records.len();
        let initial_passes = records.iter().filter(|r| r.initial_pass).count();
        let edited_passes =
            records.iter().filter(|r| r.edited_pass == Some(true)).count();
        let failures = judged - initial_passes;
        let rate = |n: usize| if judged == 0 { 0.0 } else { n as f64 / judged as f64 };
        ActionabilityAggregates {
            initial_pass_rate: rate(initial_passes),
            edited_pass_rate: rate(initial_passes + edited_passes),
            delta: rate(initial_passes + edited_passes) - rate(initial_passes),
            actionability: (failures > 0).then(|| edited_passes as f64 / failures as f64),
            judged,
            excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionabilityOutcome {
    pub instruction_id: String,
    pub initial_response: String,
    pub records: Vec<ActionabilityRecord>,
    pub excluded: Vec<ExcludedCriterion>,
    pub aggregates: ActionabilityAggregates,
}

/// Runs the whole loop for one instruction. The draft comes from
/// `responder_params` (typically the model under evaluation); verdicts and
/// edits use `judge_params`. Judge failures exclude a criterion; edit
/// failures keep it with `edit_failed` set and no pass credit.
pub fn actionability_suite(
    gateway: &Gateway,
    judge_params: &ModelParams,
    responder_params: &ModelParams,
    instruction: &Instruction,
    criteria: &[Criterion],
) -> Result<ActionabilityOutcome> {
    let initial_response = gateway.complete(&responder_params.request(&instruction.text))?;
    let judge = Judge::new(gateway, judge_params.clone());
    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for criterion in criteria {
        let initial_pass =
            match judge.satisfaction(&instruction.text, &initial_response, &criterion.text) {
                Ok(v) => v,
                Err(e) => {
                    excluded.push(ExcludedCriterion {
                        criterion: criterion.text.clone(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
        if initial_pass {
            records.push(ActionabilityRecord {
                criterion: criterion.text.clone(),
                initial_pass: true,
                edited_pass: None,
                delta: 0,
                edit_failed: false,
            });
            continue;
        }
        let edited = match judge.edit(&instruction.text, &initial_response, &criterion.text) {
            Ok(text) => text,
            Err(e) => {
                log::warn!("edit failed for criterion '{}': {e}", criterion.text);
                records.push(ActionabilityRecord {
                    criterion: criterion.text.clone(),
                    initial_pass: false,
                    edited_pass: None,
                    delta: 0,
                    edit_failed: true,
                });
                continue;
            }
        };
        match judge.satisfaction(&instruction.text, &edited, &criterion.text) {
            Ok(edited_pass) => records.push(ActionabilityRecord {
                criterion: criterion.text.clone(),
                initial_pass: false,
                edited_pass: Some(edited_pass),
                delta: i8::from(edited_pass),
                edit_failed: false,
            }),
            Err(e) => excluded.push(ExcludedCriterion {
                criterion: criterion.text.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let aggregates = ActionabilityAggregates::from_records(&records, excluded.len());
    Ok(ActionabilityOutcome {
        instruction_id: instruction.id.clone(),
        initial_response,
        records,
        excluded,
        aggregates,
    })
}
