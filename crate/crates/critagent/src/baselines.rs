//! Baseline criteria generators that skip web retrieval entirely: direct
//! instruction decomposition and zero-shot model checklists (optionally
//! pinned to a target count).

use crate::error::{Error, Result};
use crate::gateway::parse::{parse_advice_lines, parse_numbered_list};
use crate::gateway::{Gateway, ModelParams};
use crate::model::{Criterion, CriteriaSet, Instruction, Source};
use crate::prompts;

pub struct BaselineGenerator<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
    run_id: String,
}

impl<'a> BaselineGenerator<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams, run_id: impl Into<String>) -> Self {
        BaselineGenerator { gateway, params, run_id: run_id.into() }
    }

    /// Splits the instruction itself into its explicitly stated requirements.
    /// The reply must be a strictly numbered list; these criteria restate the
    /// instruction, so they are left unranked.
    pub fn instruction_decomposition(&self, instruction: &Instruction) -> Result<CriteriaSet> {
        let prompt = prompts::instruction_decomposition(&instruction.text);
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let lines = parse_numbered_list(&reply)?;
        let criteria = lines.into_iter().map(|t| Criterion::new(t, Source::Id)).collect();
        Ok(CriteriaSet::new(&instruction.id, Source::Id, criteria, &self.run_id))
    }

    /// Zero-shot checklist straight from the model. With `n`, the prompt asks
    /// for exactly `n` factors; a short reply gets one top-up request and an
    /// oversized one is truncated, so the result has exactly `n` entries
    /// whenever the model cooperates at all.
    pub fn llm_prompted(
        &self,
        instruction: &Instruction,
        n: Option<usize>,
    ) -> Result<CriteriaSet> {
        let (prompt, source) = match n {
            Some(n) => (prompts::llm_checklist_n(&instruction.text, n), Source::LlmN),
            None => (prompts::llm_checklist(&instruction.text), Source::Llm),
        };
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let mut lines = parse_advice_lines(&reply);
        if lines.is_empty() {
            return Err(Error::Parse(crate::error::ParseError::EmptyList));
        }
        if let Some(n) = n {
            if lines.len() < n {
                let more = self.additional_lines(instruction, &lines, n - lines.len())?;
                lines.extend(more);
            }
            lines.truncate(n);
        }
        let criteria = lines.into_iter().map(|t| Criterion::new(t, source)).collect();
        Ok(CriteriaSet::new(&instruction.id, source, criteria, &self.run_id))
    }

    /// One follow-up request for `m` factors not already covered by
    /// `existing`. Used to top up a short fixed-count checklist.
    fn additional_lines(
        &self,
        instruction: &Instruction,
        existing: &[String],
        m: usize,
    ) -> Result<Vec<String>> {
        let rendered = prompts::render_numbered(existing);
        let prompt = prompts::llm_checklist_additional(&instruction.text, &rendered, m);
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let lines = parse_advice_lines(&reply);
        if lines.is_empty() {
            return Err(Error::Parse(crate::error::ParseError::EmptyList));
        }
        Ok(lines)
    }
}
