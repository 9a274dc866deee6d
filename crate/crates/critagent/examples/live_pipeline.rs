//! The same pipeline against real providers. Needs LLM_API_KEY (an
//! OpenAI-compatible chat endpoint) and SEARCH_API_KEY (a Serper-style
//! search endpoint); exits quietly when either is missing so CI can run the
//! examples unconditionally.
//!
//! Run with:
//!   LLM_API_KEY=... SEARCH_API_KEY=... \
//!     cargo run --example live_pipeline -- "write a haiku about rust"

use critagent::model::Instruction;
use critagent::pipeline::EaWebPipeline;
use critagent::run::{build_gateway, RunConfig};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    if std::env::var("LLM_API_KEY").is_err() || std::env::var("SEARCH_API_KEY").is_err() {
        println!("LLM_API_KEY and SEARCH_API_KEY are not both set; skipping the live run.");
        println!("See the generate_criteria example for the recorded, offline version.");
        return Ok(());
    }

    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "Write an engaging opening scene for a mystery novel set in a lighthouse.".into()
    });
    let instruction = Instruction {
        id: "live-001".into(),
        dataset: "live".into(),
        text,
        human_criteria: Vec::new(),
    };

    let config = RunConfig { cache_dir: ".critagent-cache".into(), ..RunConfig::default() };
    let (gateway, _log) = build_gateway(&config)?;
    let pipeline = EaWebPipeline::new(&gateway, config.params(), "live-example");

    println!("running the full pipeline for: {}\n", instruction.text);
    let outcome = pipeline.run(&instruction)?;

    for run in &outcome.query_runs {
        println!("query: {} ({} docs kept)", run.query.text, run.selected.len());
    }
    println!("\nranked criteria:");
    for criterion in &outcome.criteria.criteria {
        println!("  {:>4.1}  {}", criterion.rank_score.unwrap_or(f64::NAN), criterion.text);
    }
    for warning in &outcome.warnings {
        println!("warning: {warning}");
    }
    Ok(())
}
