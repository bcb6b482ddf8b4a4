//! Count API appearances on two captures of one page and compare them.

use webbundle::queries::{compare_appearances, count_api_appearances, ApiFilter, DeltaClass};
use webbundle::synth::{generate_scenario, scenario_to_bundle, Size};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let filter = ApiFilter::bundled();
    let a = scenario_to_bundle(&generate_scenario(5, Size::Large))?.bundle;
    let mut b_scenario = generate_scenario(5, Size::Large);
    // Drop a third of the events to stand in for a less faithful capture.
    let keep = b_scenario.events.len() * 2 / 3;
    b_scenario.events.truncate(keep);
    let b = scenario_to_bundle(&b_scenario)?.bundle;

    let origin = &a.manifest.page_origin;
    let baseline = count_api_appearances(&a.graph, origin, Some(&filter));
    let other = count_api_appearances(&b.graph, origin, Some(&filter));
    let cmp = compare_appearances(&baseline, &other);

    for d in &cmp.deltas {
        let mark = match d.class {
            DeltaClass::Equal => "=",
            DeltaClass::More => "+",
            DeltaClass::Fewer => "-",
        };
        println!(
            "{mark} {:<40} {:>3} -> {}",
            d.api, d.baseline_count, d.other_count
        );
    }
    let s = cmp.summary;
    println!(
        "equal {} / more {} / fewer {} of {}",
        s.equal,
        s.more,
        s.fewer,
        s.total()
    );
    println!("only in the other capture: {}", cmp.extras.len());
    Ok(())
}
