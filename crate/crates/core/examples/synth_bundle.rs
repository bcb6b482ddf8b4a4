//! Generate a scenario, inject two races, and look at the ledger.

use webbundle::synth::{generate_scenario, inject_races, scenario_to_bundle, Size};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(42);
    let mut scenario = generate_scenario(seed, Size::Medium);
    inject_races(&mut scenario, 2);
    let synth = scenario_to_bundle(&scenario)?;
    let ledger = &synth.ledger;

    println!("site {} ({} events)", ledger.site, scenario.events.len());
    for (kind, n) in &ledger.event_counts {
        println!("  {kind:<24} {n}");
    }
    println!(
        "graph: {} nodes, {} edges",
        synth.bundle.graph.nodes().len(),
        synth.bundle.graph.edges().len()
    );
    println!(
        "requests: {} ({} races)",
        ledger.requests.len(),
        ledger.races.len()
    );
    println!(
        "HAR page-context entries: {}",
        ledger.page_context_entries()
    );
    println!("inline handlers: {}", ledger.inline_handlers());
    for (party, n) in &ledger.third_parties {
        println!("  third party {party}: {n}");
    }
    Ok(())
}
