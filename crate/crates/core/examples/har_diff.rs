//! Filter a HAR down to page context and compare it with the graph.

use webbundle::harfilter::{diff_requests, filter_page_context, InternalUrlList};
use webbundle::queries::extract_requests;
use webbundle::synth::{generate_scenario, inject_races, scenario_to_bundle, Size};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let internal = InternalUrlList::bundled();
    for races in [0, 3] {
        let mut scenario = generate_scenario(9, Size::Large);
        inject_races(&mut scenario, races);
        let bundle = scenario_to_bundle(&scenario)?.bundle;

        let page = filter_page_context(&bundle.har, &bundle.manifest, &internal);
        for v in page.verdicts.iter().filter(|v| !v.kept) {
            println!("  dropped entry {:>3}: {}", v.index, v.reason);
        }
        let diff = diff_requests(&extract_requests(&bundle.graph)?, &page.kept);
        println!(
            "races={races}: matched {}, har-only {}, graph-only {}, relative difference {:.4}",
            diff.matched,
            diff.har_only.len(),
            diff.graph_only.len(),
            diff.relative_difference
        );
        for g in &diff.graph_only {
            println!("  graph only: {} {}", g.request, g.url);
        }
    }
    Ok(())
}
