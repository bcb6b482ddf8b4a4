use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use url::Url;

use super::filter::{FilterList, MatchTarget};
use super::suffix::SuffixList;
use crate::bundle::WebBundle;
use crate::graph::{request_chains, NodeType};
use crate::harfilter::{filter_page_context, InternalUrlList};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThirdPartyStat {
    pub third_party: String,
    pub first_party_count: usize,
    pub request_count: u64,
    pub tracking: bool,
}

/// Where a bundle's requests are read from.
#[derive(Debug, Clone, Copy)]
pub enum RequestSource<'a> {
    /// Document URLs plus every URL of every request chain in the graph.
    Graph,
    /// Page-context HAR entries.
    Har(&'a InternalUrlList),
}

impl RequestSource<'_> {
    /// One URL per request on the wire; redirect hops count separately.
    pub fn urls(&self, bundle: &WebBundle) -> Vec<String> {
        match self {
            RequestSource::Graph => {
                let mut urls: Vec<String> = bundle
                    .graph
                    .nodes()
                    .iter()
                    .filter(|n| n.node_type == NodeType::Document)
                    .filter_map(|n| n.url.clone())
                    .collect();
                // Broken chains are a validation matter; prevalence uses what parses.
                if let Ok(chains) = request_chains(&bundle.graph) {
                    urls.extend(chains.into_iter().flat_map(|c| c.urls));
                }
                urls
            }
            RequestSource::Har(internal) => {
                filter_page_context(&bundle.har, &bundle.manifest, internal)
                    .kept
                    .into_iter()
                    .map(|e| e.url)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PartyTally {
    first_parties: BTreeSet<String>,
    requests: u64,
    tracking: bool,
}

/// Per-party tallies over a corpus. Merging is associative and
/// commutative, so partial results from independent workers combine in any
/// order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrevalenceAccumulator {
    parties: BTreeMap<String, PartyTally>,
    third_party_requests: u64,
    pages: u64,
}

impl PrevalenceAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one page's requests. URLs without a host are ignored.
    pub fn add_page<S: AsRef<str>>(
        &mut self,
        page_origin: &str,
        urls: impl IntoIterator<Item = S>,
        list: &FilterList,
        suffixes: &SuffixList,
    ) {
        self.pages += 1;
        let page_host = Url::parse(page_origin)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_default();
        let first_party = suffixes.site(&page_host);
        for url in urls {
            let Ok(parsed) = Url::parse(url.as_ref()) else {
                continue;
            };
            let Some(host) = parsed.host_str() else {
                continue;
            };
            let party = suffixes.site(host);
            if party == first_party {
                continue;
            }
            self.third_party_requests += 1;
            let blocked = list
                .match_target(&MatchTarget::new(&parsed, page_origin, suffixes))
                .blocked;
            let tally = self.parties.entry(party).or_default();
            tally.first_parties.insert(first_party.clone());
            tally.requests += 1;
            tally.tracking |= blocked;
        }
    }

    pub fn add_bundle(
        &mut self,
        bundle: &WebBundle,
        source: RequestSource<'_>,
        list: &FilterList,
        suffixes: &SuffixList,
    ) {
        let urls = source.urls(bundle);
        self.add_page(&bundle.manifest.page_origin, urls, list, suffixes);
    }

    pub fn merge(&mut self, other: PrevalenceAccumulator) {
        self.third_party_requests += other.third_party_requests;
        self.pages += other.pages;
        for (party, tally) in other.parties {
            let mine = self.parties.entry(party).or_default();
            mine.first_parties.extend(tally.first_parties);
            mine.requests += tally.requests;
            mine.tracking |= tally.tracking;
        }
    }

    pub fn third_party_requests(&self) -> u64 {
        self.third_party_requests
    }

    pub fn pages(&self) -> u64 {
        self.pages
    }

    /// Parties seen on at least `min_first_parties` first parties, most
    /// prevalent first, ties by name.
    pub fn finish(&self, min_first_parties: usize) -> Vec<ThirdPartyStat> {
        let mut stats: Vec<ThirdPartyStat> = self
            .parties
            .iter()
            .filter(|(_, t)| t.first_parties.len() >= min_first_parties.max(1))
            .map(|(name, t)| ThirdPartyStat {
                third_party: name.clone(),
                first_party_count: t.first_parties.len(),
                request_count: t.requests,
                tracking: t.tracking,
            })
            .collect();
        stats.sort_by(|a, b| {
            b.first_party_count
                .cmp(&a.first_party_count)
                .then_with(|| a.third_party.cmp(&b.third_party))
        });
        stats
    }
}

/// Default prevalence floor: a party must appear on two first parties.
pub const DEFAULT_MIN_FIRST_PARTIES: usize = 2;

/// Streams a corpus through a [`PrevalenceAccumulator`]. Bundles may be
/// passed by value so that each is dropped once counted.
pub fn third_party_prevalence<B: Borrow<WebBundle>>(
    corpus: impl IntoIterator<Item = B>,
    list: &FilterList,
    suffixes: &SuffixList,
    min_first_parties: usize,
) -> Vec<ThirdPartyStat> {
    let mut acc = PrevalenceAccumulator::new();
    for bundle in corpus {
        acc.add_bundle(bundle.borrow(), RequestSource::Graph, list, suffixes);
    }
    acc.finish(min_first_parties)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(acc: &mut PrevalenceAccumulator, origin: &str, urls: &[&str], list: &FilterList) {
        acc.add_page(origin, urls.iter().copied(), list, SuffixList::bundled());
    }

    #[test]
    fn counts_distinct_first_parties() {
        let list = FilterList::parse("||tracker.example^", "t");
        let mut acc = PrevalenceAccumulator::new();
        page(
            &mut acc,
            "https://a.com",
            &["https://cdn.example.org/x.js", "https://a.com/y"],
            &list,
        );
        page(
            &mut acc,
            "https://www.b.com",
            &[
                "https://img.cdn.example.org/z.png",
                "https://cdn.example.org/x.js",
            ],
            &list,
        );
        page(
            &mut acc,
            "https://b.com",
            &["https://cdn.example.org/x.js", "https://tracker.example/p"],
            &list,
        );
        let stats = acc.finish(1);
        assert_eq!(
            stats[0],
            ThirdPartyStat {
                third_party: "example.org".into(),
                first_party_count: 2,
                request_count: 4,
                tracking: false
            }
        );
        assert_eq!(stats[1].third_party, "tracker.example");
        assert!(stats[1].tracking);
        assert_eq!(acc.finish(2).len(), 1);
        assert_eq!(acc.third_party_requests(), 5);
    }

    #[test]
    fn merge_matches_sequential() {
        let list = FilterList::parse("||t.net^", "t");
        let pages: [(&str, &[&str]); 3] = [
            ("https://a.com", &["https://t.net/1", "https://x.org/"]),
            ("https://b.com", &["https://t.net/2"]),
            ("https://c.com", &["https://x.org/", "https://y.org/"]),
        ];
        let mut whole = PrevalenceAccumulator::new();
        for (o, u) in pages {
            page(&mut whole, o, u, &list);
        }
        let mut left = PrevalenceAccumulator::new();
        let mut right = PrevalenceAccumulator::new();
        page(&mut left, pages[0].0, pages[0].1, &list);
        page(&mut right, pages[2].0, pages[2].1, &list);
        page(&mut right, pages[1].0, pages[1].1, &list);
        right.merge(left);
        assert_eq!(right, whole);
    }

    #[test]
    fn ties_sort_by_name() {
        let list = FilterList::parse("", "t");
        let mut acc = PrevalenceAccumulator::new();
        page(
            &mut acc,
            "https://a.com",
            &["https://zz.com/", "https://bb.com/"],
            &list,
        );
        let names: Vec<_> = acc.finish(1).into_iter().map(|s| s.third_party).collect();
        assert_eq!(names, ["bb.com", "zz.com"]);
    }
}
