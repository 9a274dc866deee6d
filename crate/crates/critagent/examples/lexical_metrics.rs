//! The two offline metrics. Specificity rewards criteria built from tokens
//! that are rare across a pool of criteria; implicitness rewards criteria
//! that do not just echo the instruction's own words. Neither needs a model.
//!
//! Run with: cargo run --example lexical_metrics

use critagent::metrics::{implicitness, specificity, CriteriaPool};

fn main() -> anyhow::Result<()> {
    let pool_texts = [
        "the response should use vivid sensory detail",
        "the response should keep a consistent point of view",
        "the response should give each character a distinct voice",
        "the response should avoid cliches",
    ];
    let pool = CriteriaPool::build(&pool_texts)?;
    println!("pool of {} criteria\n", pool.len());

    println!("specificity (higher = built from rarer tokens):");
    for text in [
        "the response should use vivid sensory detail",
        "the response should foreshadow the duel's outcome",
        "the response should avoid cliches and purple prose",
    ] {
        let score = specificity(&pool, text)?;
        print!("  {:>6.3}  {text}", score.value);
        if !score.out_of_pool.is_empty() {
            print!("   (tokens absent from the pool: {})", score.out_of_pool.join(", "));
        }
        println!();
    }

    let instruction = "Write a poem about autumn leaves falling.";
    println!("\nimplicitness against: {instruction}");
    for criterion in [
        "the poem should mention autumn leaves",
        "the poem should use a melancholy tone",
        "the response should employ vivid imagery and metaphor",
    ] {
        println!("  {:>6.3}  {criterion}", implicitness(instruction, criterion));
    }

    // A criterion that is pure stopwords has no content tokens to score.
    match specificity(&pool, "it should be the and a") {
        Err(e) => println!("\nstopword-only criterion: {e}"),
        Ok(_) => unreachable!("stopword-only text cannot receive a score"),
    }
    Ok(())
}
