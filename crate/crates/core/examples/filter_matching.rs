//! Match URLs against an Adblock-style list.
//!
//! cargo run --example filter_matching [list.txt]

use url::Url;
use webbundle::trackers::{FilterList, SuffixList};

const DEFAULT: &str = "\
[Adblock Plus 2.0]
||ads.example.com^
/pixel.gif|
||cdn.example.net/track/*$third-party
@@||ads.example.com/allowed/
example.org##.banner
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let list = match std::env::args_os().nth(1) {
        Some(p) => FilterList::parse(&std::fs::read_to_string(&p)?, p.to_string_lossy()),
        None => FilterList::parse(DEFAULT, "default"),
    };
    println!("{} rules, skipped {:?}", list.rules.len(), list.skipped);

    let suffixes = SuffixList::bundled();
    let page = "https://news.example.org";
    for u in [
        "https://ads.example.com/banner.js",
        "https://sub.ads.example.com/x?y=1",
        "https://ads.example.com/allowed/ok.js",
        "https://badads.example.com/banner.js",
        "https://img.example.org/a/pixel.gif",
        "https://cdn.example.net/track/1.js",
        "https://www.example.org/track/1.js",
    ] {
        let m = list.match_url(&Url::parse(u)?, page, suffixes);
        let rule = m.rule.map(|r| r.raw.as_str()).unwrap_or("-");
        println!(
            "{:<7} {u:<42} {rule}",
            if m.blocked { "BLOCK" } else { "allow" }
        );
    }
    Ok(())
}
