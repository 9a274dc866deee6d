//! The three baseline criteria generators side by side: instruction
//! decomposition, an open-ended prompted checklist, and a fixed-size
//! prompted checklist (which tops itself up when the model under-delivers).
//!
//! Run with: cargo run --example baseline_checklists

use critagent::baselines::BaselineGenerator;
use critagent::fixtures;
use critagent::gateway::Gateway;
use critagent::model::CriteriaSet;

fn print_set(label: &str, set: &CriteriaSet) {
    println!("{label} [{}], {} criteria:", set.method, set.criteria.len());
    for (i, criterion) in set.criteria.iter().enumerate() {
        println!("  {}. {}", i + 1, criterion.text);
    }
    println!();
}

fn main() -> anyhow::Result<()> {
    let instruction = fixtures::demo_instruction();
    let (chat, search, fetcher, _log) = fixtures::demo_bundle().into_providers();
    let gateway = Gateway::builder().chat(chat).search(search).fetcher(fetcher).build();
    let baselines = BaselineGenerator::new(&gateway, fixtures::demo_params(), "example-run");

    println!("instruction: {}\n", instruction.text);

    let id = baselines.instruction_decomposition(&instruction)?;
    print_set("instruction decomposition", &id);

    let open = baselines.llm_prompted(&instruction, None)?;
    print_set("open checklist", &open);

    let fixed = baselines.llm_prompted(&instruction, Some(fixtures::DEMO_CHECKLIST_N))?;
    print_set(
        &format!("fixed checklist (n = {})", fixtures::DEMO_CHECKLIST_N),
        &fixed,
    );

    Ok(())
}
