//! Turns a writing instruction into a handful of search queries aimed at
//! actionable expert advice ("how to ...", "what are ...").

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::parse_json_object;
use crate::gateway::{Gateway, ModelParams};
use crate::model::Instruction;
use crate::prompts;

/// A search query plus the learning goal the model attached to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptualQuery {
    pub text: String,
    pub goal: String,
    pub instruction_id: String,
}

pub struct QueryGenerator<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
}

impl<'a> QueryGenerator<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams) -> Self {
        QueryGenerator { gateway, params }
    }

    /// Asks for a JSON object mapping query -> goal. Key order defines the
    /// downstream processing order. One re-ask with a terse JSON reminder on
    /// parse failure, after which the instruction fails.
    pub fn generate(&self, instruction: &Instruction) -> Result<Vec<ConceptualQuery>> {
        let prompt = prompts::query_generation(&instruction.text);
        let reply = self.gateway.complete(&self.params.request(&prompt))?;
        let pairs = match parse_json_object(&reply) {
            Ok(pairs) => pairs,
            Err(first_err) => {
                let retry_prompt = prompts::with_reminder(&prompt, prompts::JSON_REMINDER);
                let retry = self.gateway.complete(&self.params.request(retry_prompt))?;
                parse_json_object(&retry).map_err(|second_err| Error::QueryGenerationFailed {
                    instruction_id: instruction.id.clone(),
                    reason: format!("{first_err}; after re-ask: {second_err}"),
                })?
            }
        };
        let queries: Vec<ConceptualQuery> = pairs
            .into_iter()
            .filter(|(k, _)| !k.trim().is_empty())
            .map(|(text, goal)| ConceptualQuery {
                text,
                goal,
                instruction_id: instruction.id.clone(),
            })
            .collect();
        if queries.is_empty() {
            return Err(Error::QueryGenerationFailed {
                instruction_id: instruction.id.clone(),
                reason: "model returned an empty JSON object".into(),
            });
        }
        Ok(queries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::mock::MockChat;
    use crate::gateway::Gateway;

    fn params() -> ModelParams {
        ModelParams { model: "m".into(), temperature: 0.0, max_tokens: 256 }
    }

    fn instruction() -> Instruction {
        Instruction {
            id: "i1".into(),
            dataset: "demo".into(),
            text: "Write a poem about autumn".into(),
            human_criteria: vec![],
        }
    }

    #[test]
    fn parses_queries_in_key_order() {
        let mut chat = MockChat::new();
        chat.stub(
            &params(),
            &prompts::query_generation("Write a poem about autumn"),
            r#"{"how to write a poem": "craft advice", "what are poetic devices": "device list", "how to evoke a season": "imagery advice"}"#,
        );
        let gw = Gateway::builder().chat(chat).build();
        let queries = QueryGenerator::new(&gw, params()).generate(&instruction()).unwrap();
        assert_eq!(queries.len(), 3);
        assert_eq!(queries[0].text, "how to write a poem");
        assert_eq!(queries[2].goal, "imagery advice");
        assert!(queries.iter().all(|q| q.instruction_id == "i1"));
    }

    #[test]
    fn reasks_once_with_json_reminder() {
        let base = prompts::query_generation("Write a poem about autumn");
        let mut chat = MockChat::new();
        chat.stub(&params(), &base, "sorry, I can't do JSON today");
        chat.stub(
            &params(),
            &prompts::with_reminder(&base, prompts::JSON_REMINDER),
            r#"{"how to write": "advice"}"#,
        );
        let log = chat.log();
        let gw = Gateway::builder().chat(chat).build();
        let queries = QueryGenerator::new(&gw, params()).generate(&instruction()).unwrap();
        assert_eq!(queries.len(), 1);
        assert_eq!(log.len(), 2);
    }

    #[test]
    fn fails_after_second_parse_error() {
        let base = prompts::query_generation("Write a poem about autumn");
        let mut chat = MockChat::new();
        chat.stub(&params(), &base, "no json");
        chat.stub(
            &params(),
            &prompts::with_reminder(&base, prompts::JSON_REMINDER),
            "still no json",
        );
        let gw = Gateway::builder().chat(chat).build();
        let err = QueryGenerator::new(&gw, params()).generate(&instruction()).unwrap_err();
        assert!(matches!(err, Error::QueryGenerationFailed { .. }), "got {err}");
    }
}
