//! Instruction dataset ingestion. The on-disk format is JSONL with one record
//! per line: `{id, dataset, text, human_criteria: [string, ...]}`. Human
//! criteria arrive as plain strings and are lifted into [`Criterion`] values
//! tagged [`Source::Human`].

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::model::{Criterion, Instruction, Source};

/// Wire format of one dataset row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub dataset: String,
    pub text: String,
    #[serde(default)]
    pub human_criteria: Vec<String>,
}

impl From<InstructionRecord> for Instruction {
    fn from(rec: InstructionRecord) -> Self {
        Instruction {
            id: rec.id,
            dataset: rec.dataset,
            text: rec.text,
            human_criteria: rec
                .human_criteria
                .into_iter()
                .map(|t| Criterion::new(t, Source::Human))
                .collect(),
        }
    }
}

/// Keywords used by the optional writing-task filter: keep an instruction only
/// when its text mentions one of these.
pub const WRITING_KEYWORDS: [&str; 3] = ["write", "create", "develop"];

/// Loads instructions, validating non-empty text and id uniqueness. With
/// `filter_keywords` set, rows whose text mentions none of
/// [`WRITING_KEYWORDS`] are dropped.
pub fn load_instructions(path: &Path, filter_keywords: bool) -> Result<Vec<Instruction>> {
    let records: Vec<InstructionRecord> = jsonl::read_jsonl(path)?;
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    for rec in records {
        let instruction: Instruction = rec.into();
        instruction.validate().map_err(|reason| Error::InvalidData {
            kind: "instruction",
            reason,
        })?;
        if !seen.insert(instruction.id.clone()) {
            return Err(Error::InvalidData {
                kind: "instruction",
                reason: format!("duplicate id '{}' in {}", instruction.id, path.display()),
            });
        }
        if filter_keywords {
            let lowered = instruction.text.to_lowercase();
            if !WRITING_KEYWORDS.iter().any(|k| lowered.contains(k)) {
                continue;
            }
        }
        out.push(instruction);
    }
    Ok(out)
}
