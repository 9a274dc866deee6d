//! The judged edit-loop metric: draft a response to the instruction, judge
//! each criterion against it, edit the draft for every criterion it failed,
//! and judge again. Actionability is the fraction of initial failures the
//! edit repaired.
//!
//! Run with: cargo run --example actionability

use critagent::criteria::CriteriaGenerator;
use critagent::fixtures;
use critagent::gateway::Gateway;
use critagent::metrics::actionability::actionability_suite;
use critagent::model::Source;

fn main() -> anyhow::Result<()> {
    let instruction = fixtures::demo_instruction();
    let (chat, search, fetcher, _log) = fixtures::demo_bundle().into_providers();
    let gateway = Gateway::builder().chat(chat).search(search).fetcher(fetcher).build();
    let params = fixtures::demo_params();

    // Score the criteria the demo pipeline would produce.
    let generator = CriteriaGenerator::new(&gateway, params.clone(), "example-run");
    let criteria = fixtures::demo_kept_criteria_with_scores()
        .into_iter()
        .map(|(text, _)| critagent::model::Criterion {
            text: text.to_string(),
            source: Source::EaWeb,
            rank_score: None,
            provenance: Vec::new(),
            external_scores: None,
        })
        .collect();
    let set = generator.rank_criteria(criteria, &instruction, Source::EaWeb)?;

    let outcome = actionability_suite(&gateway, &params, &params, &instruction, &set.criteria)?;

    println!("instruction: {}\n", instruction.text);
    println!("initial draft:\n{}\n", outcome.initial_response);
    for record in &outcome.records {
        let initial = if record.initial_pass { "pass" } else { "FAIL" };
        let edited = match record.edited_pass {
            Some(true) => ", edited pass",
            Some(false) => ", edited FAIL",
            None => "",
        };
        println!("  [{initial}{edited}] {}", record.criterion);
    }
    for excluded in &outcome.excluded {
        println!("  [excluded: {}] {}", excluded.reason, excluded.criterion);
    }

    let a = outcome.aggregates;
    println!("\njudged criteria:    {}", a.judged);
    println!("initial pass rate:  {:.3}", a.initial_pass_rate);
    println!("edited pass rate:   {:.3}", a.edited_pass_rate);
    println!("delta:              {:.3}", a.delta);
    match a.actionability {
        Some(value) => println!("actionability:      {value:.3}"),
        None => println!("actionability:      undefined (the draft failed nothing)"),
    }
    Ok(())
}
