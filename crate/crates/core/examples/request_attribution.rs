//! Attribute requests to a context and a responsible party, then build the
//! per-domain breakdown over a small corpus.

use webbundle::queries::{attribute_requests, AttributionTable};
use webbundle::synth::{generate_scenario, scenario_to_bundle, Size};
use webbundle::trackers::SuffixList;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suffixes = SuffixList::bundled();
    let target = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "doubleclick.net".into());
    let mut table = AttributionTable::new();
    for seed in 1..=30 {
        let bundle = scenario_to_bundle(&generate_scenario(seed, Size::Medium))?.bundle;
        let origin = &bundle.manifest.page_origin;
        let attribution = attribute_requests(&bundle.graph, origin, suffixes)?;
        if seed == 1 {
            for r in attribution.requests.iter().take(8) {
                println!(
                    "{:<12} {:<16} {:<22} {}",
                    r.request.to_string(),
                    r.context
                        .as_ref()
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                    r.responsible_party
                        .as_ref()
                        .map(|p| p.to_string())
                        .unwrap_or_default(),
                    r.first_url
                );
            }
        }
        table.add(origin, &attribution.requests, &target, suffixes);
    }
    println!("\nrequests to {target}: {}", table.total());
    for row in table.rows() {
        println!(
            "{:<16} {:<22} {:>4} requests on {} origins",
            row.context.to_string(),
            row.responsible_party.to_string(),
            row.requests,
            row.origins
        );
    }
    Ok(())
}
