//! The full web pipeline on the recorded demo traffic, printing every
//! intermediate stage: conceptual queries, rated documents, the top-k
//! selection, per-document answers, folded summaries, the aggregated advice
//! list, and the final filtered + ranked criteria.
//!
//! Run with: cargo run --example generate_criteria

use critagent::fixtures;
use critagent::gateway::Gateway;
use critagent::pipeline::EaWebPipeline;

fn main() -> anyhow::Result<()> {
    let instruction = fixtures::demo_instruction();
    let (chat, search, fetcher, log) = fixtures::demo_bundle().into_providers();
    let gateway = Gateway::builder().chat(chat).search(search).fetcher(fetcher).build();

    println!("instruction [{}]", instruction.id);
    println!("  {}\n", instruction.text);

    let pipeline = EaWebPipeline::new(&gateway, fixtures::demo_params(), "example-run");
    let outcome = pipeline.run(&instruction)?;

    for (qi, run) in outcome.query_runs.iter().enumerate() {
        println!("query {}: {}", qi + 1, run.query.text);
        println!("  goal: {}", run.query.goal);
        println!("  rated candidates:");
        for doc in &run.documents {
            let mark = if run.selected.contains(&doc.url) { "*" } else { " " };
            println!(
                "   {mark} goodness={} relevance={} rank={}  {}",
                doc.goodness.map_or("?".into(), |g| g.to_string()),
                doc.relevance.map_or("?".into(), |r| r.to_string()),
                doc.search_rank,
                doc.url
            );
        }
        println!("  answers:");
        for answer in &run.answers {
            let status = if answer.is_no_answer { "(no answer)" } else { "" };
            println!("    {} {status}", answer.url);
        }
        println!("  folded advice ({} lines):", run.summary.advice.len());
        for line in &run.summary.advice {
            println!("    - {line}");
        }
        println!();
    }

    println!(
        "aggregated advice across {} queries ({} lines):",
        outcome.aggregate.source_queries.len(),
        outcome.aggregate.lines.len()
    );
    for line in &outcome.aggregate.lines {
        println!("  - {line}");
    }

    println!("\nfinal criteria [{}], ranked:", outcome.criteria.method);
    for criterion in &outcome.criteria.criteria {
        println!(
            "  {:>4.1}  {}",
            criterion.rank_score.unwrap_or(f64::NAN),
            criterion.text
        );
    }

    for warning in &outcome.warnings {
        println!("warning: {warning}");
    }
    println!("\nprovider calls made: {}", log.len());
    Ok(())
}
