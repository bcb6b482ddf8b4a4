//! Rank third parties across a corpus and flag the ones a filter list
//! would block. Bundles are generated and consumed one at a time.

use webbundle::synth::{generate_scenario, scenario_to_bundle, Size};
use webbundle::trackers::{parse_filter_list, PrevalenceAccumulator, RequestSource, SuffixList};

const LIST: &str = "\
! tiny tracking list
||doubleclick.net^
||google-analytics.com^$third-party
||adtrack.example^
@@||adtrack.example/consent/
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let list = parse_filter_list(LIST);
    let suffixes = SuffixList::bundled();
    let mut acc = PrevalenceAccumulator::new();
    for seed in 1..=50 {
        let bundle = scenario_to_bundle(&generate_scenario(seed, Size::Small))?.bundle;
        acc.add_bundle(&bundle, RequestSource::Graph, &list, suffixes);
    }
    println!(
        "{} pages, {} third-party requests",
        acc.pages(),
        acc.third_party_requests()
    );
    for (i, s) in acc.finish(2).iter().enumerate() {
        println!(
            "{:>2}. {:<24} {:>3} sites {:>5} requests{}",
            i + 1,
            s.third_party,
            s.first_party_count,
            s.request_count,
            if s.tracking { "  tracking" } else { "" }
        );
    }
    Ok(())
}
