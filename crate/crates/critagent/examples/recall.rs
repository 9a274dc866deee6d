//! Recall of human-written criteria: for each cutoff k, what fraction of the
//! human criteria is entailed by the top-k generated ones? Entailment at a
//! small k carries forward to larger cutoffs without extra judge calls, so
//! the curve is monotone by construction.
//!
//! Run with: cargo run --example recall

use critagent::criteria::CriteriaGenerator;
use critagent::fixtures;
use critagent::gateway::Gateway;
use critagent::metrics::recall::{dataset_recall, RecallEvaluator};
use critagent::model::{Criterion, Source};

fn main() -> anyhow::Result<()> {
    let instruction = fixtures::demo_instruction();
    let (chat, search, fetcher, log) = fixtures::demo_bundle().into_providers();
    let gateway = Gateway::builder().chat(chat).search(search).fetcher(fetcher).build();
    let params = fixtures::demo_params();

    let generator = CriteriaGenerator::new(&gateway, params.clone(), "example-run");
    let criteria: Vec<Criterion> = fixtures::demo_kept_criteria_with_scores()
        .into_iter()
        .map(|(text, _)| Criterion {
            text: text.to_string(),
            source: Source::EaWeb,
            rank_score: None,
            provenance: Vec::new(),
            external_scores: None,
        })
        .collect();
    let generated = generator.rank_criteria(criteria, &instruction, Source::EaWeb)?;

    println!("human criteria:");
    for human in &instruction.human_criteria {
        println!("  - {}", human.text);
    }
    println!();

    let evaluator = RecallEvaluator::new(&gateway, params);
    let before = log.len();
    let curve = evaluator.recall_curve(
        &generated,
        &instruction.human_criteria,
        &fixtures::DEMO_RECALL_CURVE_KS,
    )?;
    for outcome in &curve {
        let verdicts: Vec<&str> =
            outcome.verdicts.iter().map(|v| if *v { "yes" } else { "no" }).collect();
        println!("recall@{}: {:.3}  (entailed: {})", outcome.k, outcome.value, verdicts.join(", "));
    }
    println!("judge calls for the whole curve: {}", log.len() - before);

    let at_max: Vec<f64> = curve.iter().rev().take(1).map(|o| o.value).collect();
    println!("dataset recall (this one instruction): {:.3}", dataset_recall(&at_max));
    Ok(())
}
