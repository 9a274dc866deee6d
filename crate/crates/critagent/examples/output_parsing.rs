//! The tolerant model-output parsers on deliberately messy replies: numbered
//! lists with mixed markers, JSON wrapped in code fences and prose, trailing
//! scores buried in rationale, and binary verdicts stated sideways.
//!
//! Run with: cargo run --example output_parsing

use critagent::gateway::parse::{
    parse_applies_verdict, parse_binary_verdict, parse_json_object, parse_numbered_list,
    parse_trailing_score,
};

fn main() -> anyhow::Result<()> {
    let list = "Here are my thoughts:\n\n1. Open with motion, not scenery.\n2) Ground the reader in one point of view.\n3: Let the fight reveal character.\n4 - End on a cost, not just a victory.\nThat's all!";
    println!("numbered list from mixed markers:");
    for entry in parse_numbered_list(list)? {
        println!("  - {entry}");
    }

    let json = "Sure! Here is the JSON you asked for:\n```json\n{\"research\": \"how to write sword fight scenes\", \"craft\": \"pacing advice for action sequences\"}\n```\nLet me know if you need anything else.";
    println!("\nJSON object dug out of prose and fences:");
    for (key, value) in parse_json_object(json)? {
        println!("  {key} => {value}");
    }

    let scored = "The criterion is quite relevant to the task because fights need stakes; therefore, the score is: 8";
    println!("\ntrailing score: {}", parse_trailing_score(scored, 0, 10)?);

    for verdict in [
        "Considering the pacing and the stakes, therefore, the answer is yes",
        "The draft never mentions the cost of victory. Therefore, the answer is no",
    ] {
        println!("binary verdict: {:?} <- {verdict}", parse_binary_verdict(verdict)?);
    }

    for applies in [
        "this speaks to pacing, therefore, the criteria applies yes",
        "generic praise only, therefore, the criteria does not apply no",
        "hard to say either way",
    ] {
        println!("applies verdict: {:?} <- {applies}", parse_applies_verdict(applies));
    }

    // Garbage degrades loudly instead of panicking.
    match parse_trailing_score("no digits anywhere", 0, 10) {
        Err(e) => println!("\nunparseable score: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
