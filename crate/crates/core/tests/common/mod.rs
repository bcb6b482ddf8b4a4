//! Oracles and helpers shared by the integration tests. Each oracle is a
//! deliberately naive second implementation; none of them call into the
//! code they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use url::Url;
use webbundle::bundle::write_bundle;
use webbundle::cli::{CorpusEntry, CorpusManifest};
use webbundle::graph::{EdgeType, ExecutionGraph, GraphEdge, GraphNode, NodeType, ScriptType};
use webbundle::queries::{Appearance, DeltaClass};
use webbundle::synth::{generate_scenario, inject_races, scenario_to_bundle, Size, SynthBundle};
use webbundle::trackers::SuffixList;

pub fn synth(seed: u64, size: Size, races: usize) -> SynthBundle {
    let mut s = generate_scenario(seed, size);
    inject_races(&mut s, races);
    scenario_to_bundle(&s).expect("generated scenarios are valid")
}

/// Writes `seeds` as packed bundles plus a corpus manifest; returns the
/// manifest path and the ledgers.
pub fn write_corpus(
    dir: &Path,
    seeds: impl IntoIterator<Item = u64>,
    size: Size,
) -> (PathBuf, Vec<SynthBundle>) {
    let mut entries = Vec::new();
    let mut bundles = Vec::new();
    for seed in seeds {
        let b = synth(seed, size, 0);
        let name = format!("s{seed}.web");
        write_bundle(&b.bundle, &dir.join(&name), seed % 2 == 0).unwrap();
        entries.push(CorpusEntry {
            path: name.into(),
            page_origin: b.ledger.page_origin.clone(),
        });
        bundles.push(b);
    }
    let path = dir.join("corpus.json");
    std::fs::write(&path, CorpusManifest::new(entries, "test corpus").to_json()).unwrap();
    (path, bundles)
}

// ---- filter rules ----

/// A rule in the small subset the oracle understands.
#[derive(Debug, Clone)]
pub struct NaiveRule {
    pub exception: bool,
    /// 0 plain, 1 `|`, 2 `||`.
    pub anchor: u8,
    pub pattern: String,
    pub end_anchor: bool,
    pub third_party: Option<bool>,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

impl NaiveRule {
    pub fn render(&self) -> String {
        let mut s = String::new();
        if self.exception {
            s.push_str("@@");
        }
        s.push_str(["", "|", "||"][self.anchor as usize]);
        s.push_str(&self.pattern);
        if self.end_anchor {
            s.push('|');
        }
        let mut opts = Vec::new();
        match self.third_party {
            Some(true) => opts.push("third-party".to_string()),
            Some(false) => opts.push("~third-party".to_string()),
            None => {}
        }
        if !self.include.is_empty() || !self.exclude.is_empty() {
            let mut d: Vec<String> = self.include.clone();
            d.extend(self.exclude.iter().map(|x| format!("~{x}")));
            opts.push(format!("domain={}", d.join("|")));
        }
        if !opts.is_empty() {
            s.push('$');
            s.push_str(&opts.join(","));
        }
        s
    }
}

fn naive_sep(b: u8) -> bool {
    !(b.is_ascii_alphanumeric() || b"_-.%".contains(&b))
}

/// Backtracking match of an ABP pattern against `s`, anchored at the
/// start of `s`.
pub fn naive_pattern(p: &[u8], s: &[u8], end: bool) -> bool {
    match p.split_first() {
        None => !end || s.is_empty(),
        Some((b'*', rest)) => (0..=s.len()).any(|k| naive_pattern(rest, &s[k..], end)),
        Some((b'^', rest)) => {
            if s.is_empty() {
                naive_pattern(rest, s, end)
            } else {
                naive_sep(s[0]) && naive_pattern(rest, &s[1..], end)
            }
        }
        Some((c, rest)) => s.first() == Some(c) && naive_pattern(rest, &s[1..], end),
    }
}

fn under(host: &str, domain: &str) -> bool {
    host == domain || host.ends_with(&format!(".{domain}"))
}

pub fn naive_rule_matches(
    rule: &NaiveRule,
    url: &str,
    page_origin: &str,
    suffixes: &SuffixList,
) -> bool {
    let parsed = Url::parse(url).unwrap();
    let text = parsed.as_str().to_ascii_lowercase();
    let host = parsed.host_str().unwrap_or("").to_ascii_lowercase();
    let page_host = Url::parse(page_origin)
        .unwrap()
        .host_str()
        .unwrap_or("")
        .to_ascii_lowercase();
    let third = suffixes.site(&host) != suffixes.site(&page_host);
    if rule.third_party.is_some_and(|t| t != third) {
        return false;
    }
    if !rule.include.is_empty() && !rule.include.iter().any(|d| under(&page_host, d)) {
        return false;
    }
    if rule.exclude.iter().any(|d| under(&page_host, d)) {
        return false;
    }
    let s = text.as_bytes();
    let p = rule.pattern.to_ascii_lowercase();
    let p = p.as_bytes();
    let host_start = text.find("://").unwrap() + 3;
    let starts: Vec<usize> = match rule.anchor {
        0 => (0..=s.len()).collect(),
        1 => vec![0],
        _ => {
            let mut v = vec![host_start];
            let span = &s[host_start..host_start + host.len()];
            v.extend(
                span.iter()
                    .enumerate()
                    .filter(|(_, &b)| b == b'.')
                    .map(|(i, _)| host_start + i + 1),
            );
            v
        }
    };
    starts
        .into_iter()
        .any(|j| naive_pattern(p, &s[j..], rule.end_anchor))
}

/// Blocked iff some blocking rule matches and no exception does.
pub fn naive_blocked(
    rules: &[NaiveRule],
    url: &str,
    page_origin: &str,
    suffixes: &SuffixList,
) -> bool {
    let hit = |exception: bool| {
        rules
            .iter()
            .filter(|r| r.exception == exception)
            .any(|r| naive_rule_matches(r, url, page_origin, suffixes))
    };
    hit(false) && !hit(true)
}

/// Random rule over a small alphabet so that matches are common.
pub fn random_rule(rng: &mut impl rand::Rng) -> NaiveRule {
    const ALPHA: &[u8] = b"abc./-1*^";
    let len = rng.gen_range(1..=6);
    let mut stars = 0;
    let mut pattern = String::new();
    while pattern.len() < len {
        let c = ALPHA[rng.gen_range(0..ALPHA.len())];
        if c == b'*' {
            if stars == 3 {
                continue;
            }
            stars += 1;
        }
        pattern.push(c as char);
    }
    // `/.../` would be a regex rule.
    if pattern.len() >= 2 && pattern.starts_with('/') && pattern.ends_with('/') {
        pattern.push('a');
    }
    let domains = ["a.com", "b.a.com", "c.co.uk", "x.net"];
    let pick = |rng: &mut dyn rand::RngCore| {
        domains[(rng.next_u32() as usize) % domains.len()].to_string()
    };
    let mut include = Vec::new();
    let mut exclude = Vec::new();
    if rng.gen_bool(0.2) {
        include.push(pick(rng));
    }
    if rng.gen_bool(0.1) {
        exclude.push(pick(rng));
    }
    NaiveRule {
        exception: rng.gen_bool(0.2),
        anchor: rng.gen_range(0..3),
        pattern,
        end_anchor: rng.gen_bool(0.15),
        third_party: match rng.gen_range(0..5) {
            0 => Some(true),
            1 => Some(false),
            _ => None,
        },
        include,
        exclude,
    }
}

pub fn random_url(rng: &mut impl rand::Rng) -> String {
    const HOSTS: &[&str] = &[
        "a.com",
        "b.a.com",
        "ab.c.co.uk",
        "c.co.uk",
        "x.net",
        "1-b.x.net",
    ];
    const PATH: &[u8] = b"abc./-1_?=";
    let host = HOSTS[rng.gen_range(0..HOSTS.len())];
    let len = rng.gen_range(0..14);
    let path: String = (0..len)
        .map(|_| PATH[rng.gen_range(0..PATH.len())] as char)
        .collect();
    let scheme = if rng.gen_bool(0.8) { "https" } else { "http" };
    format!("{scheme}://{host}/{path}")
}

pub fn random_page(rng: &mut impl rand::Rng) -> String {
    const PAGES: &[&str] = &[
        "https://a.com",
        "https://www.b.a.com",
        "https://c.co.uk",
        "https://x.net",
    ];
    PAGES[rng.gen_range(0..PAGES.len())].to_string()
}

// ---- appearances ----

/// Naive join: for every baseline pair, scan the other list.
pub fn naive_join(
    baseline: &[Appearance],
    other: &[Appearance],
) -> BTreeMap<(String, String), (u64, u64, DeltaClass)> {
    let mut out = BTreeMap::new();
    for b in baseline {
        let mut o = 0;
        for x in other {
            if x.origin == b.origin && x.api == b.api {
                o = x.count;
            }
        }
        let class = if o == b.count {
            DeltaClass::Equal
        } else if o > b.count {
            DeltaClass::More
        } else {
            DeltaClass::Fewer
        };
        out.insert((b.origin.clone(), b.api.clone()), (b.count, o, class));
    }
    out
}

// ---- third parties ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecountRow {
    pub third_party: String,
    pub first_party_count: usize,
    pub request_count: u64,
    pub tracking: bool,
}

/// Recount third-party prevalence from ledgers alone, matching every hop
/// with the naive filter oracle.
pub fn recount_third_parties(
    ledgers: &[&webbundle::synth::SynthLedger],
    rules: &[NaiveRule],
    min_first_parties: usize,
) -> Vec<RecountRow> {
    let suffixes = SuffixList::bundled();
    let mut sites: BTreeMap<String, (BTreeSet<String>, u64, bool)> = BTreeMap::new();
    for l in ledgers {
        for r in &l.requests {
            for hop in &r.hops {
                if hop.site == l.site {
                    continue;
                }
                let slot = sites.entry(hop.site.clone()).or_default();
                slot.0.insert(l.site.clone());
                slot.1 += 1;
                slot.2 |= naive_blocked(rules, &hop.url, &l.page_origin, suffixes);
            }
        }
    }
    let mut rows: Vec<RecountRow> = sites
        .into_iter()
        .filter(|(_, v)| v.0.len() >= min_first_parties)
        .map(|(k, v)| RecountRow {
            third_party: k,
            first_party_count: v.0.len(),
            request_count: v.1,
            tracking: v.2,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.first_party_count
            .cmp(&a.first_party_count)
            .then(a.third_party.cmp(&b.third_party))
    });
    rows
}

// ---- hand-built graphs ----

fn script(id: u64, ty: ScriptType, url: Option<&str>) -> GraphNode {
    let mut n = GraphNode::new(id, NodeType::Script);
    n.script_type = Some(ty);
    n.url = url.map(String::from);
    n
}

fn listener_edge(
    id: u64,
    source: u64,
    target: u64,
    ty: EdgeType,
    key: &str,
    listener: u64,
) -> GraphEdge {
    let mut e = GraphEdge::new(id, source, target, ty, id);
    e.key = Some(key.into());
    e.listener_id = Some(listener);
    e
}

/// A script adds a click listener whose body is a separate, string-compiled
/// script of unknown type.
pub fn inline_handler_graph() -> ExecutionGraph {
    let parser = GraphNode::new(0, NodeType::Parser);
    let mut doc = GraphNode::new(1, NodeType::Document);
    doc.url = Some("https://example.com/".into());
    let app = script(2, ScriptType::External, Some("https://example.com/app.js"));
    let mut button = GraphNode::new(3, NodeType::HtmlElement);
    button.tag_name = Some("BUTTON".into());
    let mut handler = script(4, ScriptType::Unknown, None);
    handler
        .attributes
        .insert("source".into(), "alert(1)".into());
    ExecutionGraph::new(
        vec![parser, doc, app, button, handler],
        vec![
            GraphEdge::new(0, 0, 1, EdgeType::Structure, 0),
            listener_edge(1, 2, 3, EdgeType::AddEventListener, "click", 7),
            listener_edge(2, 3, 4, EdgeType::EventListener, "click", 7),
        ],
    )
    .unwrap()
}

/// `element.onclick = function () {...}`: the listener is the adding script.
pub fn programmatic_handler_graph() -> ExecutionGraph {
    let parser = GraphNode::new(0, NodeType::Parser);
    let mut doc = GraphNode::new(1, NodeType::Document);
    doc.url = Some("https://example.com/".into());
    let app = script(2, ScriptType::Inline, None);
    let mut button = GraphNode::new(3, NodeType::HtmlElement);
    button.tag_name = Some("BUTTON".into());
    ExecutionGraph::new(
        vec![parser, doc, app, button],
        vec![
            GraphEdge::new(0, 0, 1, EdgeType::Structure, 0),
            listener_edge(1, 2, 3, EdgeType::AddEventListener, "click", 9),
            listener_edge(2, 3, 2, EdgeType::EventListener, "click", 9),
        ],
    )
    .unwrap()
}

/// A parser-added `onload` attribute inside a cross-origin iframe.
pub fn cross_origin_frame_graph() -> ExecutionGraph {
    let parser = GraphNode::new(0, NodeType::Parser);
    let mut doc = GraphNode::new(1, NodeType::Document);
    doc.url = Some("https://example.com/".into());
    let mut iframe = GraphNode::new(2, NodeType::HtmlElement);
    iframe.tag_name = Some("IFRAME".into());
    let mut inner = GraphNode::new(3, NodeType::Document);
    inner.url = Some("https://widgets.other.net/embed.html".into());
    inner.frame_id = Some("f1".into());
    let mut body = GraphNode::new(4, NodeType::HtmlElement);
    body.tag_name = Some("BODY".into());
    body.frame_id = Some("f1".into());
    let mut handler = script(5, ScriptType::Unknown, None);
    handler.frame_id = Some("f1".into());
    ExecutionGraph::new(
        vec![parser, doc, iframe, inner, body, handler],
        vec![
            GraphEdge::new(0, 0, 1, EdgeType::Structure, 0),
            GraphEdge::new(1, 0, 2, EdgeType::CreateNode, 1),
            GraphEdge::new(2, 2, 3, EdgeType::Structure, 2),
            GraphEdge::new(3, 0, 4, EdgeType::CreateNode, 3),
            listener_edge(4, 0, 4, EdgeType::AddEventListener, "load", 3),
            listener_edge(5, 4, 5, EdgeType::EventListener, "load", 3),
        ],
    )
    .unwrap()
}
