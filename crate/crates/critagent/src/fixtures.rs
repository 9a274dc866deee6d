//! A fully scripted demo: one writing instruction plus recorded provider
//! fixtures covering every request the pipeline, baselines, and judged
//! metrics will make for it. Everything is deterministic, so tests and the
//! offline examples can assert exact outputs.
//!
//! The fixture replies are built with the same prompt-rendering and
//! selection functions the runtime uses, so they cannot drift out of sync
//! with the code that consumes them.

use crate::dataset::InstructionRecord;
use crate::gateway::mock::FixtureBundle;
use crate::gateway::{ModelParams, SearchHit, WebDocument};
use crate::model::{Criterion, Instruction, Source};
use crate::prompts;
use crate::retrieval::select_top_k;

pub const DEMO_MODEL: &str = "gpt-4o-mini-2024-07-18";

pub const DEMO_INSTRUCTION_ID: &str = "demo-001";
pub const DEMO_DATASET: &str = "demo";
pub const DEMO_INSTRUCTION_TEXT: &str =
    "Write an engaging fight scene between two rival swordsmen for the climax of my fantasy novel.";

pub const DEMO_HUMAN_CRITERIA: [&str; 2] = [
    "The fight should reveal each swordsman's character through how he fights.",
    "The scene should stay consistent with the magic system established earlier in the novel.",
];

/// How many checklist entries the fixed-count baseline fixture covers.
pub const DEMO_CHECKLIST_N: usize = 8;
/// The recall cutoff the entailment fixtures cover.
pub const DEMO_RECALL_K: usize = 5;

/// Cutoffs the demo traffic has entailment verdicts for.
pub const DEMO_RECALL_CURVE_KS: [usize; 3] = [1, 3, 5];

const QUERIES: [(&str, &str); 3] = [
    (
        "how to write a compelling sword fight scene",
        "choreography and pacing techniques experts recommend for duels",
    ),
    (
        "what makes a climactic duel in a fantasy novel satisfying",
        "how to deliver stakes and emotional payoff in a final confrontation",
    ),
    (
        "common mistakes when writing action scenes in fiction",
        "pitfalls experts warn against in fight-scene prose",
    ),
];

/// (url, title, body, goodness, relevance, answer), in search-rank order.
type DocSpec = (&'static str, &'static str, &'static str, u8, u8, &'static str);

const QUERY_DOCS: [[DocSpec; 5]; 3] = [
    [
        (
            "https://fictionguild.example/sword-fight-choreography",
            "Choreographing Believable Sword Fights",
            "A craft essay on blocking duels for the page, with worked examples from published fantasy. Covers beats, footwork, and when to summarize.",
            4,
            2,
            "Choreograph only the beats that matter and let the reader's imagination fill the connective tissue.",
        ),
        (
            "https://writingexcuses.example/pacing-action",
            "Pacing Action Scenes",
            "Veteran novelists discuss sentence rhythm in action writing: short sentences accelerate, long sentences linger. Includes annotated passages.",
            5,
            2,
            "Shorten sentences and paragraphs during rapid exchanges so the prose itself accelerates the pace.",
        ),
        (
            "https://blogspot.example/random-musings",
            "My Thoughts on Fantasy",
            "A personal blog post that wanders across favorite fantasy duels and eventually offers one memorable observation about viewpoint.",
            2,
            1,
            "Give the viewpoint character a personal read on every blow rather than narrating like a referee.",
        ),
        (
            "https://novelcraft.example/fight-scene-checklist",
            "A Fight Scene Checklist",
            "A practical checklist for revising fight scenes: spatial continuity, cause and effect between blows, and consistent injuries.",
            4,
            2,
            "Track both fighters' positions relative to the terrain so the blocking never contradicts itself.",
        ),
        (
            "https://swordschool.example/hema-basics",
            "Historical Fencing Basics",
            "An instructor of historical European martial arts explains how real longsword bouts actually unfold, with timing data from sparring.",
            5,
            1,
            "Real sword bouts end in seconds, so compress the duel into a few decisive exchanges.",
        ),
    ],
    [
        (
            "https://fantasyfaction.example/climactic-duels",
            "Why Climactic Duels Work",
            "An essay on final confrontations in epic fantasy arguing the duel must resolve the story's thematic argument, not just its plot.",
            4,
            2,
            "Let the duel answer the novel's central question rather than merely deciding who is the better fencer.",
        ),
        (
            "https://mythcraft.example/stakes-and-payoff",
            "Stakes and Payoff in Final Battles",
            "A structure-focused piece on making climaxes land: irreversible consequences, costs of victory, and promises kept to the reader.",
            5,
            2,
            "Make the outcome change something the protagonist cannot take back, so victory still carries a cost.",
        ),
        (
            "https://storygrid.example/obligatory-scenes",
            "Obligatory Scenes in Genre Fiction",
            "General story-structure advice on delivering the scenes a genre promises, with a short section on action climaxes.",
            4,
            1,
            "Deliver the confrontation the whole book has promised instead of swerving into an anticlimax.",
        ),
        (
            "https://seo-content.example/top-10-fight-tips",
            "Top 10 Fight Scene Tips!!!",
            "A listicle padded with affiliate links. One tip about closing images is genuinely useful; the rest is filler.",
            1,
            1,
            "End the fight on an image readers will remember.",
        ),
        (
            "https://editorsdesk.example/duel-emotions",
            "Emotion Beats in Duels",
            "A developmental editor shows how to interleave interiority between exchanges so action carries meaning.",
            4,
            2,
            "Interleave emotional beats between exchanges so readers track what the fight means, not just who is winning.",
        ),
    ],
    [
        (
            "https://writersdigest.example/action-mistakes",
            "Action Scene Mistakes to Avoid",
            "A craft column cataloguing the most common reasons fight scenes drag, starting with exhaustive blow-by-blow narration.",
            5,
            2,
            "Avoid narrating every single parry; a blow-by-blow transcript reads slower than the fight it describes.",
        ),
        (
            "https://reddit.example/r-writing-thread",
            "Thread: my fight scenes feel flat",
            "A forum thread where one reply lands on the aftermath problem: fights that leave no mark on the fighters.",
            2,
            1,
            "Remember to show the aftermath in the fighters' bodies: torn knuckles, burning lungs, shaking hands.",
        ),
        (
            "https://prosecraft.example/blow-by-blow",
            "The Blow-by-Blow Trap",
            "An essay on ruthless cutting in action prose: every exchange must move the tactical or emotional state.",
            4,
            2,
            "Cut any exchange that does not change the tactical or emotional situation.",
        ),
        (
            "https://campuswrite.example/setting-in-action",
            "Using Setting During Action",
            "A university writing-center handout on staging: terrain, light, and obstacles as active forces in a scene.",
            4,
            2,
            "Use the environment as a third combatant: footing, light, and obstacles should shape the fight.",
        ),
        (
            "https://inkwell.example/dialogue-in-fights",
            "Dialogue Under Pressure",
            "A magazine piece on speech during violence, arguing for clipped lines that fit between breaths.",
            3,
            2,
            "Keep mid-fight dialogue terse; long speeches shatter the illusion of physical urgency.",
        ),
    ],
];

/// The rewritten criteria as returned by the rewrite fixture, in list order.
/// Entry 4 deliberately breaks the "the response should" convention; entry 4
/// is also the one the filter drops.
pub const DEMO_REWRITTEN_CRITERIA: [&str; 8] = [
    "The response should convey the physical toll of the duel through concrete sensory detail.",
    "The response should give both swordsmen distinct fighting styles that reflect their personalities.",
    "The response should escalate the stakes beat by beat until the final exchange.",
    "Readers should finish the scene knowing exactly what the victory cost.",
    "The response should keep sentences short during rapid exchanges to quicken the pace.",
    "The response should anchor the fight in a vividly rendered setting that participates in the action.",
    "The response should let the rivals' history surface in dialogue or flashes of memory mid-fight.",
    "The response should resolve the duel in a way that pays off the novel's central conflict.",
];

/// 1-based index into [`DEMO_REWRITTEN_CRITERIA`] of the criterion the
/// filter stage rejects.
pub const DEMO_FILTERED_OUT: usize = 4;

/// Relevance scores for the seven criteria that survive the filter, in their
/// pre-rank (filter output) order.
pub const DEMO_RANK_SCORES: [i64; 7] = [7, 9, 9, 4, 8, 6, 10];

pub const DEMO_LLM_N_CRITERIA: [&str; 8] = [
    "The response should describe a fight scene between two rival swordsmen.",
    "The response should be written as a scene suitable for the climax of a fantasy novel.",
    "The response should make the fight engaging through tension and momentum shifts.",
    "The response should use vivid sensory language.",
    "The response should reflect the rivalry between the two swordsmen.",
    "The response should maintain a consistent point of view.",
    "The response should have clear stakes for the outcome of the duel.",
    "The response should avoid repetitive action descriptions.",
];

/// Relevance scores for [`DEMO_LLM_N_CRITERIA`], used when the merged method
/// re-ranks the union.
pub const DEMO_LLM_N_RANK_SCORES: [i64; 8] = [8, 5, 9, 3, 7, 2, 6, 4];

const DEMO_LLM_CRITERIA: [&str; 9] = [
    "The response should be a fight scene.",
    "The response should feature two rival swordsmen.",
    "The response should be engaging.",
    "The response should fit the tone of a fantasy novel.",
    "The response should work as a climax.",
    "The response should show the swordsmen's rivalry.",
    "The response should include vivid action descriptions.",
    "The response should have a clear outcome.",
    "The response should avoid excessive gore.",
];

const DEMO_ID_CRITERIA: [&str; 6] = [
    "the response should be a fight scene",
    "the response should feature two rival swordsmen",
    "the response should be engaging",
    "the response should work as the climax of the novel",
    "the response should fit the fantasy genre",
    "the response should be suitable for a novel",
];

const DEMO_DRAFT: &str = "Steel rang against steel as Kaelen and Voss circled beneath the burning keep. \
Kaelen fought the way he had lived, all patience and counterstrokes, while Voss pressed in with the \
reckless fury that had once made them brothers-in-arms. When the last exchange came, it cost Kaelen \
his sword hand and Voss everything else.";

/// 1-based positions (in final ranked order) of the criteria the draft
/// already satisfies; the rest get one edit attempt each.
const DRAFT_PASSES: [usize; 3] = [1, 2, 5];
/// 1-based position (in final ranked order) of the one criterion whose edit
/// still fails the judge.
const STUBBORN_EDIT: usize = 7;

const QUERY_JSON_REPLY: &str = r#"{
"how to write a compelling sword fight scene": "choreography and pacing techniques experts recommend for duels",
"what makes a climactic duel in a fantasy novel satisfying": "how to deliver stakes and emotional payoff in a final confrontation",
"common mistakes when writing action scenes in fiction": "pitfalls experts warn against in fight-scene prose"
}"#;

pub fn demo_params() -> ModelParams {
    ModelParams { model: DEMO_MODEL.into(), temperature: 0.0, max_tokens: 1024 }
}

pub fn demo_instruction() -> Instruction {
    Instruction {
        id: DEMO_INSTRUCTION_ID.into(),
        dataset: DEMO_DATASET.into(),
        text: DEMO_INSTRUCTION_TEXT.into(),
        human_criteria: DEMO_HUMAN_CRITERIA
            .iter()
            .map(|t| Criterion::new(*t, Source::Human))
            .collect(),
    }
}

/// The demo instruction in the JSONL wire format the CLI reads.
pub fn demo_instruction_record() -> InstructionRecord {
    InstructionRecord {
        id: DEMO_INSTRUCTION_ID.into(),
        dataset: DEMO_DATASET.into(),
        text: DEMO_INSTRUCTION_TEXT.into(),
        human_criteria: DEMO_HUMAN_CRITERIA.iter().map(|t| t.to_string()).collect(),
    }
}

/// The criteria the filter keeps, in filter-output order, paired with the
/// relevance score the rank fixture assigns each.
pub fn demo_kept_criteria_with_scores() -> Vec<(&'static str, i64)> {
    DEMO_REWRITTEN_CRITERIA
        .iter()
        .enumerate()
        .filter(|(i, _)| i + 1 != DEMO_FILTERED_OUT)
        .map(|(_, t)| *t)
        .zip(DEMO_RANK_SCORES)
        .collect()
}

/// The web-grounded criteria in final ranked order with their scores: the
/// exact content the demo run writes out.
pub fn demo_expected_ea_web() -> Vec<(&'static str, f64)> {
    let mut kept = demo_kept_criteria_with_scores();
    kept.sort_by_key(|(_, score)| std::cmp::Reverse(*score));
    kept.into_iter().map(|(t, s)| (t, s as f64)).collect()
}

/// The merged (web + fixed-count checklist) criteria in final ranked order.
pub fn demo_expected_ea_full() -> Vec<(&'static str, f64)> {
    let mut all: Vec<(&'static str, i64)> = demo_expected_ea_web()
        .into_iter()
        .map(|(t, s)| (t, s as i64))
        .chain(DEMO_LLM_N_CRITERIA.iter().copied().zip(DEMO_LLM_N_RANK_SCORES))
        .collect();
    all.sort_by_key(|(_, score)| std::cmp::Reverse(*score));
    all.into_iter().map(|(t, s)| (t, s as f64)).collect()
}

fn query_docs(query_index: usize) -> Vec<WebDocument> {
    QUERY_DOCS[query_index]
        .iter()
        .enumerate()
        .map(|(i, (url, title, body, goodness, relevance, _))| WebDocument {
            url: url.to_string(),
            title: title.to_string(),
            body_text: body.to_string(),
            goodness: Some(*goodness),
            relevance: Some(*relevance),
            search_rank: (i + 1) as u32,
        })
        .collect()
}

fn answer_for(url: &str) -> &'static str {
    QUERY_DOCS
        .iter()
        .flatten()
        .find(|(u, ..)| *u == url)
        .map(|(_, _, _, _, _, answer)| *answer)
        .expect("url from demo table")
}

/// Per query, the document answers in selection order: the exact texts the
/// summarize fold sees and (because the fold fixtures preserve them
/// verbatim) the advice lines each query contributes.
pub fn demo_query_advice(query_index: usize) -> Vec<String> {
    select_top_k(&query_docs(query_index), 5)
        .iter()
        .map(|d| answer_for(&d.url).to_string())
        .collect()
}

fn stub_rank(
    bundle: &mut FixtureBundle,
    params: &ModelParams,
    instruction: &str,
    criterion: &str,
    score: i64,
) {
    bundle.record_completion(
        params,
        &prompts::relevance_ranking(instruction, criterion),
        &format!(
            "The aspect speaks to a property a reader can check in the text alone. \
therefore, the score is: {score}"
        ),
    );
}

fn stub_satisfaction(
    bundle: &mut FixtureBundle,
    params: &ModelParams,
    instruction: &str,
    response: &str,
    criterion: &str,
    pass: bool,
) {
    let verdict = if pass { "yes" } else { "no" };
    bundle.record_completion(
        params,
        &prompts::satisfaction(instruction, response, criterion),
        &format!(
            "Comparing the response against the criterion step by step. \
therefore, the answer is {verdict}"
        ),
    );
}

/// Builds the full fixture bundle. Every reply is derived from the tables
/// above via the same prompt builders the runtime uses.
pub fn demo_bundle() -> FixtureBundle {
    let params = demo_params();
    let instruction = demo_instruction();
    let mut bundle = FixtureBundle::default();

    bundle.record_completion(
        &params,
        &prompts::query_generation(&instruction.text),
        QUERY_JSON_REPLY,
    );

    let mut per_query_advice: Vec<Vec<String>> = Vec::new();
    for (qi, (query, _goal)) in QUERIES.iter().enumerate() {
        let hits: Vec<SearchHit> = QUERY_DOCS[qi]
            .iter()
            .enumerate()
            .map(|(i, (url, title, ..))| SearchHit {
                url: url.to_string(),
                title: title.to_string(),
                rank: (i + 1) as u32,
            })
            .collect();
        bundle.record_search(query, hits);
        for (url, title, body, goodness, relevance, _) in &QUERY_DOCS[qi] {
            bundle.record_document(url, title, body);
            bundle.record_completion(
                &params,
                &prompts::url_goodness(url, body),
                &format!("The source shows its level of craft authority clearly. Score: {goodness}"),
            );
            bundle.record_completion(
                &params,
                &prompts::url_relevance(url, title, body, &instruction.text),
                &match relevance {
                    2 => "2 - yes and it provides specific advice that will help me write a response to the instruction".to_string(),
                    1 => "1 - yes but it only provides general advice that will help me write a response to the instruction".to_string(),
                    _ => "0 - no, it doesn't help at all".to_string(),
                },
            );
        }
        let answers = demo_query_advice(qi);
        for (_, _, body, _, _, answer) in &QUERY_DOCS[qi] {
            bundle.record_completion(
                &params,
                &prompts::document_qa(body, query, &instruction.text),
                answer,
            );
        }
        // The summarize fold: each step returns the numbered union of the
        // answers seen so far, so nothing is ever lost.
        let mut accumulator = answers[0].clone();
        for (i, next) in answers.iter().enumerate().skip(1) {
            let merged = prompts::render_numbered(&answers[..=i]);
            bundle.record_completion(
                &params,
                &prompts::summarize_answers(&instruction.text, query, &accumulator, next),
                &merged,
            );
            accumulator = merged;
        }
        per_query_advice.push(answers);
    }

    // Aggregation fold across the three query lists.
    let mut aggregate = per_query_advice[0].clone();
    for next in &per_query_advice[1..] {
        let merged: Vec<String> = aggregate.iter().chain(next).cloned().collect();
        bundle.record_completion(
            &params,
            &prompts::aggregate_lists(
                &prompts::render_numbered(&aggregate),
                &prompts::render_numbered(next),
            ),
            &prompts::render_numbered(&merged),
        );
        aggregate = merged;
    }

    let rewrite_reply = prompts::render_numbered(&DEMO_REWRITTEN_CRITERIA);
    bundle.record_completion(
        &params,
        &prompts::rewrite_criteria(&instruction.text, &prompts::render_numbered(&aggregate)),
        &rewrite_reply,
    );

    let filter_entries: Vec<String> = DEMO_REWRITTEN_CRITERIA
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let number = i + 1;
            if number == DEMO_FILTERED_OUT {
                format!(
                    "\"{number}\": \"this judges what readers take away after finishing rather than a property of the text itself. therefore, the criteria does not apply no\""
                )
            } else {
                format!(
                    "\"{number}\": \"a single static response can be checked against this directly. therefore, the criteria applies yes\""
                )
            }
        })
        .collect();
    bundle.record_completion(
        &params,
        &prompts::filter_criteria(
            &instruction.text,
            &prompts::render_numbered(&DEMO_REWRITTEN_CRITERIA),
        ),
        &format!("{{\n{}\n}}", filter_entries.join(",\n")),
    );

    for (criterion, score) in demo_kept_criteria_with_scores() {
        stub_rank(&mut bundle, &params, &instruction.text, criterion, score);
    }
    for (criterion, score) in DEMO_LLM_N_CRITERIA.iter().zip(DEMO_LLM_N_RANK_SCORES) {
        stub_rank(&mut bundle, &params, &instruction.text, criterion, score);
    }

    // Baselines.
    bundle.record_completion(
        &params,
        &prompts::instruction_decomposition(&instruction.text),
        &prompts::render_numbered(&DEMO_ID_CRITERIA),
    );
    bundle.record_completion(
        &params,
        &prompts::llm_checklist(&instruction.text),
        &prompts::render_numbered(&DEMO_LLM_CRITERIA),
    );
    bundle.record_completion(
        &params,
        &prompts::llm_checklist_n(&instruction.text, DEMO_CHECKLIST_N),
        &prompts::render_numbered(&DEMO_LLM_N_CRITERIA),
    );

    // Actionability: draft, per-criterion verdicts, edits for the failures.
    bundle.record_completion(&params, &instruction.text, DEMO_DRAFT);
    for (position, (criterion, _)) in demo_expected_ea_web().iter().enumerate() {
        let number = position + 1;
        let passes = DRAFT_PASSES.contains(&number);
        stub_satisfaction(&mut bundle, &params, &instruction.text, DEMO_DRAFT, criterion, passes);
        if !passes {
            let edited = format!("{DEMO_DRAFT}\n\n[Revised so that: {criterion}]");
            bundle.record_completion(
                &params,
                &prompts::edit_response(&instruction.text, DEMO_DRAFT, criterion),
                &edited,
            );
            stub_satisfaction(
                &mut bundle,
                &params,
                &instruction.text,
                &edited,
                criterion,
                number != STUBBORN_EDIT,
            );
        }
    }

    // Recall: is each human criterion entailed by the top-k web criteria?
    // The fighting-styles criterion sits at rank 2, so the first human
    // criterion is entailed from k = 2 on; the magic-system one never is.
    for k in DEMO_RECALL_CURVE_KS {
        let top: Vec<&str> =
            demo_expected_ea_web().iter().take(k).map(|(t, _)| *t).collect();
        let rendered = prompts::render_numbered(&top);
        let first = if top.iter().any(|t| t.contains("distinct fighting styles")) {
            "yes, the distinct fighting styles point covers this"
        } else {
            "no - the list never touches how the fighters' characters come through"
        };
        bundle.record_completion(
            &params,
            &prompts::recall_entailment(&rendered, DEMO_HUMAN_CRITERIA[0]),
            &format!("{{\"{}\": \"{first}\"}}", DEMO_HUMAN_CRITERIA[0]),
        );
        bundle.record_completion(
            &params,
            &prompts::recall_entailment(&rendered, DEMO_HUMAN_CRITERIA[1]),
            &format!(
                "{{\"{}\": \"not entailed; nothing in the list covers continuity with an established magic system\"}}",
                DEMO_HUMAN_CRITERIA[1]
            ),
        );
    }

    bundle
}
