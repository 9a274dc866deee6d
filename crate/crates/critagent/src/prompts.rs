//! Prompt templates, loaded from versioned text assets. Placeholders use
//! `{{name}}` syntax and are substituted in a single pass, so placeholder-like
//! text inside a substituted value is never re-expanded.

use sha2::{Digest, Sha256};

pub const QUERY_GENERATION: &str = include_str!("../assets/prompts/query_generation.txt");
pub const DOCUMENT_QA: &str = include_str!("../assets/prompts/document_qa.txt");
pub const SUMMARIZE_ANSWERS: &str = include_str!("../assets/prompts/summarize_answers.txt");
pub const AGGREGATE_LISTS: &str = include_str!("../assets/prompts/aggregate_lists.txt");
pub const REWRITE_CRITERIA: &str = include_str!("../assets/prompts/rewrite_criteria.txt");
pub const RELEVANCE_RANKING: &str = include_str!("../assets/prompts/relevance_ranking.txt");
pub const URL_GOODNESS: &str = include_str!("../assets/prompts/url_goodness.txt");
pub const URL_RELEVANCE: &str = include_str!("../assets/prompts/url_relevance.txt");
pub const FILTER_CRITERIA: &str = include_str!("../assets/prompts/filter_criteria.txt");
pub const INSTRUCTION_DECOMPOSITION: &str =
    include_str!("../assets/prompts/instruction_decomposition.txt");
pub const LLM_CHECKLIST: &str = include_str!("../assets/prompts/llm_checklist.txt");
pub const LLM_CHECKLIST_N: &str = include_str!("../assets/prompts/llm_checklist_n.txt");
pub const LLM_CHECKLIST_ADDITIONAL: &str =
    include_str!("../assets/prompts/llm_checklist_additional.txt");
pub const SATISFACTION: &str = include_str!("../assets/prompts/satisfaction.txt");
pub const EDIT_RESPONSE: &str = include_str!("../assets/prompts/edit_response.txt");
pub const RECALL_ENTAILMENT: &str = include_str!("../assets/prompts/recall_entailment.txt");

/// Appended when a JSON reply failed to parse and we ask once more.
pub const JSON_REMINDER: &str = "Return only a valid JSON object and nothing else.";
/// Appended when a yes/no verdict was missing and we ask once more.
pub const VERDICT_REMINDER: &str =
    "End your response with 'therefore, the answer is yes' or 'therefore, the answer is no'.";

const ALL_TEMPLATES: [(&str, &str); 16] = [
    ("query_generation", QUERY_GENERATION),
    ("document_qa", DOCUMENT_QA),
    ("summarize_answers", SUMMARIZE_ANSWERS),
    ("aggregate_lists", AGGREGATE_LISTS),
    ("rewrite_criteria", REWRITE_CRITERIA),
    ("relevance_ranking", RELEVANCE_RANKING),
    ("url_goodness", URL_GOODNESS),
    ("url_relevance", URL_RELEVANCE),
    ("filter_criteria", FILTER_CRITERIA),
    ("instruction_decomposition", INSTRUCTION_DECOMPOSITION),
    ("llm_checklist", LLM_CHECKLIST),
    ("llm_checklist_n", LLM_CHECKLIST_N),
    ("llm_checklist_additional", LLM_CHECKLIST_ADDITIONAL),
    ("satisfaction", SATISFACTION),
    ("edit_response", EDIT_RESPONSE),
    ("recall_entailment", RECALL_ENTAILMENT),
];

/// Digest over every template body. Recorded in run manifests so a run can be
/// traced to the exact prompt wording that produced it.
pub fn template_set_hash() -> String {
    let mut hasher = Sha256::new();
    for (name, body) in ALL_TEMPLATES {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(body.as_bytes());
        hasher.update([0u8]);
    }
    hex_digest(hasher)
}

pub(crate) fn hex_digest(hasher: Sha256) -> String {
    let bytes = hasher.finalize();
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Single-pass placeholder substitution. Unknown placeholders are left as-is;
/// substituted values are never rescanned.
fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        match rest[start + 2..].find("}}") {
            Some(end_rel) => {
                let name = &rest[start + 2..start + 2 + end_rel];
                match pairs.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[start..start + 2 + end_rel + 2]),
                }
                rest = &rest[start + 2 + end_rel + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    // Templates end with a newline from the asset files; trim the trailing one
    // so prompts don't accumulate whitespace when reminders get appended.
    out.trim_end().to_string()
}

/// Renders items as a 1-based numbered list, one item per line.
pub fn render_numbered<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn with_reminder(prompt: &str, reminder: &str) -> String {
    format!("{prompt}\n\n{reminder}")
}

pub fn query_generation(instruction: &str) -> String {
    fill(QUERY_GENERATION, &[("instruction", instruction)])
}

pub fn document_qa(article: &str, query: &str, instruction: &str) -> String {
    fill(
        DOCUMENT_QA,
        &[("article", article), ("query", query), ("instruction", instruction)],
    )
}

pub fn summarize_answers(instruction: &str, query: &str, advice_1: &str, advice_2: &str) -> String {
    fill(
        SUMMARIZE_ANSWERS,
        &[
            ("instruction", instruction),
            ("query", query),
            ("advice_1", advice_1),
            ("advice_2", advice_2),
        ],
    )
}

pub fn aggregate_lists(list1: &str, list2: &str) -> String {
    fill(AGGREGATE_LISTS, &[("list1", list1), ("list2", list2)])
}

pub fn rewrite_criteria(instruction: &str, tips: &str) -> String {
    fill(REWRITE_CRITERIA, &[("instruction", instruction), ("tips", tips)])
}

pub fn relevance_ranking(instruction: &str, aspect: &str) -> String {
    fill(RELEVANCE_RANKING, &[("instruction", instruction), ("aspect", aspect)])
}

pub fn url_goodness(url: &str, content: &str) -> String {
    fill(URL_GOODNESS, &[("url", url), ("content", content)])
}

pub fn url_relevance(url: &str, title: &str, article: &str, instruction: &str) -> String {
    fill(
        URL_RELEVANCE,
        &[
            ("url", url),
            ("title", title),
            ("article", article),
            ("instruction", instruction),
        ],
    )
}

pub fn filter_criteria(instruction: &str, criteria: &str) -> String {
    fill(FILTER_CRITERIA, &[("instruction", instruction), ("criteria", criteria)])
}

pub fn instruction_decomposition(instruction: &str) -> String {
    fill(INSTRUCTION_DECOMPOSITION, &[("instruction", instruction)])
}

pub fn llm_checklist(instruction: &str) -> String {
    fill(LLM_CHECKLIST, &[("instruction", instruction)])
}

pub fn llm_checklist_n(instruction: &str, n: usize) -> String {
    fill(LLM_CHECKLIST_N, &[("instruction", instruction), ("n", &n.to_string())])
}

pub fn llm_checklist_additional(instruction: &str, existing: &str, n: usize) -> String {
    fill(
        LLM_CHECKLIST_ADDITIONAL,
        &[("instruction", instruction), ("existing", existing), ("n", &n.to_string())],
    )
}

pub fn satisfaction(instruction: &str, response: &str, criterion: &str) -> String {
    fill(
        SATISFACTION,
        &[("instruction", instruction), ("response", response), ("criterion", criterion)],
    )
}

pub fn edit_response(instruction: &str, response: &str, criterion: &str) -> String {
    fill(
        EDIT_RESPONSE,
        &[("instruction", instruction), ("response", response), ("criterion", criterion)],
    )
}

pub fn recall_entailment(existing_criteria: &str, new_criterion: &str) -> String {
    fill(
        RECALL_ENTAILMENT,
        &[("existing_criteria", existing_criteria), ("new_criterion", new_criterion)],
    )
}
