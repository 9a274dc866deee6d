//! Exports the recorded demo traffic to disk so the CLI can run fully
//! offline: a fixture bundle with every completion, search, and document,
//! plus a one-instruction dataset file. Prints ready-to-run commands.
//!
//! Run with: cargo run --example write_demo_fixtures [target-dir]

use std::path::PathBuf;

use critagent::fixtures;
use critagent::jsonl;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("demo"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;

    let bundle_path = dir.join("fixtures.json");
    fixtures::demo_bundle().save(&bundle_path)?;

    let dataset_path = dir.join("instructions.jsonl");
    jsonl::write_jsonl(&dataset_path, &[fixtures::demo_instruction_record()])?;

    println!("wrote {}", bundle_path.display());
    println!("wrote {}", dataset_path.display());
    println!("\ntry:");
    let base = format!(
        "cargo run --bin critagent -- --mock-fixtures {} --cache-dir {}",
        bundle_path.display(),
        dir.join("cache").display()
    );
    println!(
        "  {base} generate --dataset {} --method ea-web --out {}",
        dataset_path.display(),
        dir.join("out").display()
    );
    println!(
        "  {base} metrics --which specificity --self-pool --criteria {} --instructions {} --out {}",
        dir.join("out/criteria_ea-web.jsonl").display(),
        dataset_path.display(),
        dir.join("out").display()
    );
    println!(
        "  {base} report --criteria {} --instructions {} --out {}",
        dir.join("out/criteria_ea-web.jsonl").display(),
        dataset_path.display(),
        dir.join("out").display()
    );
    Ok(())
}
