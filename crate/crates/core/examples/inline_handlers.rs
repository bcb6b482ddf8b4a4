//! Find event listeners that were compiled from strings.

use webbundle::queries::{detect_inline_event_handlers, origin_is_affected, HandlerCorpusSummary};
use webbundle::synth::{generate_scenario, scenario_to_bundle, Size};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut summary = HandlerCorpusSummary::default();
    for seed in 1..=20 {
        let bundle = scenario_to_bundle(&generate_scenario(seed, Size::Medium))?.bundle;
        let origin = &bundle.manifest.page_origin;
        let findings = detect_inline_event_handlers(&bundle.graph, origin)?;
        if seed == 1 {
            for f in &findings {
                println!(
                    "edge {:>3} {:<10} {:<12} in {}{}",
                    f.edge_id,
                    f.event_key,
                    f.classification,
                    f.frame_origin,
                    if f.cross_origin {
                        " (cross-origin)"
                    } else {
                        ""
                    }
                );
            }
        }
        println!("{origin}: affected={}", origin_is_affected(&findings));
        summary.add(origin, &findings);
    }
    println!(
        "{} of {} origins affected; {} inline, {} programmatic listeners",
        summary.affected.len(),
        summary.origins.len(),
        summary.inline_findings,
        summary.programmatic_findings
    );
    Ok(())
}
