mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use url::Url;
use webbundle::trackers::{FilterList, SuffixList};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matcher_agrees_with_backtracking(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rules: Vec<NaiveRule> = (0..n).map(|_| random_rule(&mut rng)).collect();
        let text: String = rules.iter().map(|r| r.render() + "\n").collect();
        let list = FilterList::parse(&text, "p");
        prop_assert_eq!(list.rules.len(), n);
        let suffixes = SuffixList::bundled();
        for _ in 0..8 {
            let url = random_url(&mut rng);
            let page = random_page(&mut rng);
            let got = list.match_url(&Url::parse(&url).unwrap(), &page, suffixes).blocked;
            prop_assert_eq!(got, naive_blocked(&rules, &url, &page, suffixes), "{} {} {}", text, url, page);
        }
    }

    #[test]
    fn adding_an_exception_never_blocks_more(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rules: Vec<NaiveRule> = (0..4).map(|_| random_rule(&mut rng)).collect();
        let url = random_url(&mut rng);
        let page = random_page(&mut rng);
        let suffixes = SuffixList::bundled();
        let render = |rules: &[NaiveRule]| -> String { rules.iter().map(|r| r.render() + "\n").collect() };
        let before = FilterList::parse(&render(&rules), "a").match_url(&Url::parse(&url).unwrap(), &page, suffixes).blocked;
        let mut extra = random_rule(&mut rng);
        extra.exception = true;
        rules.push(extra);
        let after = FilterList::parse(&render(&rules), "b").match_url(&Url::parse(&url).unwrap(), &page, suffixes).blocked;
        prop_assert!(before || !after);
    }
}

#[test]
fn fixture_rules_behave_on_known_urls() {
    let list = FilterList::parse(
        include_str!("fixtures/easyprivacy_head.txt"),
        "easyprivacy_head.txt",
    );
    let s = SuffixList::bundled();
    let page = "https://www.news.example";
    let check = |u: &str| list.match_url(&Url::parse(u).unwrap(), page, s).blocked;
    assert!(check("https://www.google-analytics.com/analytics.js"));
    assert!(check("https://www.news.example/js/tracking.js"));
    assert!(check("https://x.2o7.net/b/ss/abc"));
    assert!(!check("https://x.2o7.net/b/ss/optout"));
    assert!(!check("https://www.news.example/index.html"));
    // `||google-analytics.com^$third-party` does not apply on its own site.
    let own = list.match_url(
        &Url::parse("https://www.google-analytics.com/x").unwrap(),
        "https://google-analytics.com",
        s,
    );
    assert!(!own.blocked);
}
