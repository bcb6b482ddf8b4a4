//! Separates the HAR entries a page caused from browser and proxy noise,
//! and diffs what remains against the graph's requests.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use url::Url;

use crate::bundle::Manifest;
use crate::har::{HarArchive, HarEntry, Side};
use crate::queries::{AttributedRequest, RequestRef};

pub const CHROMIUM_INTERNAL_URLS: &str = include_str!("../../data/chromium_internal_urls.txt");

/// URL prefixes of traffic the browser issues on its own behalf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InternalUrlList {
    prefixes: Vec<String>,
}

impl InternalUrlList {
    /// One prefix per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        let prefixes = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        InternalUrlList { prefixes }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn bundled() -> Self {
        Self::parse(CHROMIUM_INTERNAL_URLS)
    }

    pub fn empty() -> Self {
        InternalUrlList {
            prefixes: Vec::new(),
        }
    }

    pub fn matches(&self, url: &str) -> bool {
        self.prefixes.iter().any(|p| url.starts_with(p.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    PageContext,
    Preflight,
    CspReport,
    WebSocketUpgrade,
    InitialDocumentRedirect,
    BrowserInternal,
    ServiceWorker,
}

impl FilterReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterReason::PageContext => "page_context",
            FilterReason::Preflight => "preflight",
            FilterReason::CspReport => "csp_report",
            FilterReason::WebSocketUpgrade => "web_socket_upgrade",
            FilterReason::InitialDocumentRedirect => "initial_document_redirect",
            FilterReason::BrowserInternal => "browser_internal",
            FilterReason::ServiceWorker => "service_worker",
        }
    }
}

impl fmt::Display for FilterReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterVerdict {
    pub index: usize,
    pub kept: bool,
    pub reason: FilterReason,
}

fn fetch_dest(entry: &HarEntry) -> Option<&str> {
    entry.header(Side::Request, "Sec-Fetch-Dest")
}

fn is_document_redirect(entry: &HarEntry) -> bool {
    fetch_dest(entry).is_some_and(|d| d.eq_ignore_ascii_case("document"))
        && entry.header(Side::Response, "Location").is_some()
}

/// Classifies one entry. `before_first_document` tells whether the entry
/// precedes the first document response that is not a redirect. The first
/// matching rule wins.
pub fn classify_har_entry(
    entry: &HarEntry,
    manifest: &Manifest,
    internal: &InternalUrlList,
    before_first_document: bool,
) -> FilterReason {
    let dest = fetch_dest(entry);
    if entry.method.eq_ignore_ascii_case("OPTIONS")
        && entry
            .header(Side::Request, "Access-Control-Request-Method")
            .is_some()
    {
        return FilterReason::Preflight;
    }
    if dest.is_some_and(|d| d.eq_ignore_ascii_case("report")) {
        return FilterReason::CspReport;
    }
    if entry
        .header(Side::Request, "Upgrade")
        .is_some_and(|u| u.trim().eq_ignore_ascii_case("websocket"))
    {
        return FilterReason::WebSocketUpgrade;
    }
    if before_first_document && is_document_redirect(entry) && entry.url != manifest.final_url {
        return FilterReason::InitialDocumentRedirect;
    }
    if internal.matches(&entry.url) {
        return FilterReason::BrowserInternal;
    }
    if dest.is_some_and(|d| d.eq_ignore_ascii_case("serviceworker")) {
        return FilterReason::ServiceWorker;
    }
    FilterReason::PageContext
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageContext {
    pub kept: Vec<HarEntry>,
    pub verdicts: Vec<FilterVerdict>,
}

pub fn filter_page_context(
    har: &HarArchive,
    manifest: &Manifest,
    internal: &InternalUrlList,
) -> PageContext {
    let first_document = har.entries.iter().position(|e| {
        fetch_dest(e).is_some_and(|d| d.eq_ignore_ascii_case("document"))
            && !is_document_redirect(e)
    });
    let mut kept = Vec::new();
    let mut verdicts = Vec::with_capacity(har.entries.len());
    for (index, entry) in har.entries.iter().enumerate() {
        let before = first_document.is_none_or(|f| index < f);
        let reason = classify_har_entry(entry, manifest, internal, before);
        let is_kept = reason == FilterReason::PageContext;
        if is_kept {
            kept.push(entry.clone());
        }
        verdicts.push(FilterVerdict {
            index,
            kept: is_kept,
            reason,
        });
    }
    PageContext { kept, verdicts }
}

/// Lowercases scheme and host and drops the fragment. Unparseable input
/// is only trimmed.
pub fn normalize_url(url: &str) -> String {
    match Url::parse(url.trim()) {
        Ok(mut u) => {
            u.set_fragment(None);
            u.into()
        }
        Err(_) => url.trim().to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphOnlyReason {
    /// No HAR entry at all, e.g. the proxy missed it.
    Unmatched,
    /// The chain carries a 307 hop the browser answered internally.
    InternalRedirect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphOnly {
    pub request: RequestRef,
    pub url: String,
    pub reason: GraphOnlyReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestDiff {
    /// Graph requests matched by at least one HAR entry.
    pub matched: usize,
    /// Indexes into the kept HAR entries.
    pub har_only: Vec<usize>,
    pub graph_only: Vec<GraphOnly>,
    pub har_total: usize,
    pub graph_total: usize,
    pub relative_difference: f64,
}

/// Greedy matching by normalized URL and method, in order.
///
/// A graph request absorbs, for each URL of its chain, the earliest
/// unmatched HAR entry with that URL, so each redirect hop recorded as its
/// own HAR entry folds into one request. Totals are therefore counted in
/// requests on both sides: `har_total = matched + |har_only|` and
/// `graph_total = matched + |graph_only|`.
pub fn diff_requests(graph_requests: &[AttributedRequest], kept_har: &[HarEntry]) -> RequestDiff {
    let mut pending: HashMap<(String, String), VecDeque<usize>> = HashMap::new();
    for (i, e) in kept_har.iter().enumerate() {
        pending
            .entry((normalize_url(&e.url), e.method.to_ascii_uppercase()))
            .or_default()
            .push_back(i);
    }
    let mut absorbed = vec![false; kept_har.len()];
    let mut matched = 0;
    let mut graph_only = Vec::new();
    for r in graph_requests {
        let method = r.http_method.to_ascii_uppercase();
        let mut hit = false;
        for (hop, url) in r.urls.iter().enumerate() {
            let url = normalize_url(url);
            let mut take = |m: &str| {
                pending
                    .get_mut(&(url.clone(), m.to_string()))
                    .and_then(VecDeque::pop_front)
            };
            // A redirect may turn the method into GET.
            let found = take(&method)
                .or_else(|| (hop > 0 && method != "GET").then(|| take("GET")).flatten());
            if let Some(i) = found {
                absorbed[i] = true;
                hit = true;
            }
        }
        if hit {
            matched += 1;
        } else {
            graph_only.push(GraphOnly {
                request: r.request,
                url: r.first_url.clone(),
                reason: if r.has_internal_redirect() {
                    GraphOnlyReason::InternalRedirect
                } else {
                    GraphOnlyReason::Unmatched
                },
            });
        }
    }
    let har_only: Vec<usize> = (0..kept_har.len()).filter(|&i| !absorbed[i]).collect();
    let har_total = matched + har_only.len();
    let graph_total = matched + graph_only.len();
    let relative_difference =
        har_total.abs_diff(graph_total) as f64 / har_total.max(graph_total).max(1) as f64;
    RequestDiff {
        matched,
        har_only,
        graph_only,
        har_total,
        graph_total,
        relative_difference,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::har::Header;

    fn manifest() -> Manifest {
        Manifest {
            initial_url: "http://site.test/".into(),
            final_url: "https://www.site.test/".into(),
            captured_at: "2026-01-01T00:00:00Z".into(),
            tool_version: "t".into(),
            user_agent: "ua".into(),
            page_origin: "https://www.site.test".into(),
        }
    }

    fn entry(
        method: &str,
        url: &str,
        req: &[(&str, &str)],
        resp: &[(&str, &str)],
        status: u16,
    ) -> HarEntry {
        let mut e = HarEntry::new("2026-01-01T00:00:00Z", method, url);
        e.request_headers = req.iter().map(|(n, v)| Header::new(*n, *v)).collect();
        e.response_headers = resp.iter().map(|(n, v)| Header::new(*n, *v)).collect();
        e.response_status = status;
        e
    }

    fn classify(e: &HarEntry) -> FilterReason {
        classify_har_entry(e, &manifest(), &InternalUrlList::bundled(), true)
    }

    #[test]
    fn preflight() {
        let e = entry(
            "OPTIONS",
            "https://api.x/",
            &[("Access-Control-Request-Method", "POST")],
            &[],
            204,
        );
        assert_eq!(classify(&e), FilterReason::Preflight);
        let e = entry("OPTIONS", "https://api.x/", &[], &[], 204);
        assert_eq!(classify(&e), FilterReason::PageContext);
    }

    #[test]
    fn websocket_upgrade() {
        let e = entry("GET", "wss://x/", &[("Upgrade", "WebSocket")], &[], 101);
        assert_eq!(classify(&e), FilterReason::WebSocketUpgrade);
    }

    #[test]
    fn document_redirect() {
        let e = entry(
            "GET",
            "http://site.test/",
            &[("Sec-Fetch-Dest", "document")],
            &[("Location", "https://www.site.test/")],
            301,
        );
        assert_eq!(classify(&e), FilterReason::InitialDocumentRedirect);
        let late = classify_har_entry(&e, &manifest(), &InternalUrlList::empty(), false);
        assert_eq!(late, FilterReason::PageContext);
    }

    #[test]
    fn precedence_prefers_preflight_over_internal() {
        let e = entry(
            "OPTIONS",
            "https://update.googleapis.com/x",
            &[("Access-Control-Request-Method", "GET")],
            &[],
            204,
        );
        assert_eq!(classify(&e), FilterReason::Preflight);
    }

    #[test]
    fn filter_stops_redirect_rule_at_first_document() {
        let har = HarArchive::new(vec![
            entry(
                "GET",
                "http://site.test/",
                &[("Sec-Fetch-Dest", "document")],
                &[("Location", "https://www.site.test/")],
                301,
            ),
            entry(
                "GET",
                "https://www.site.test/",
                &[("Sec-Fetch-Dest", "document")],
                &[],
                200,
            ),
            entry(
                "GET",
                "https://www.site.test/old",
                &[("Sec-Fetch-Dest", "document")],
                &[("Location", "/new")],
                302,
            ),
        ]);
        let pc = filter_page_context(&har, &manifest(), &InternalUrlList::empty());
        let reasons: Vec<_> = pc.verdicts.iter().map(|v| v.reason).collect();
        assert_eq!(
            reasons,
            [
                FilterReason::InitialDocumentRedirect,
                FilterReason::PageContext,
                FilterReason::PageContext
            ]
        );
        assert_eq!(pc.kept.len(), 2);
        let again = filter_page_context(
            &HarArchive::new(pc.kept.clone()),
            &manifest(),
            &InternalUrlList::empty(),
        );
        assert_eq!(again.kept, pc.kept);
    }

    fn req(rid: u64, urls: &[&str], statuses: &[u16]) -> AttributedRequest {
        AttributedRequest {
            request: RequestRef::Resource(rid),
            initiator: 0,
            first_url: urls[0].into(),
            final_url: urls[urls.len() - 1].into(),
            urls: urls.iter().map(|u| u.to_string()).collect(),
            http_method: "GET".into(),
            redirect_statuses: statuses.iter().map(|s| Some(*s)).collect(),
            completed: true,
            context: None,
            responsible_party: None,
        }
    }

    #[test]
    fn identical_sides() {
        let g = vec![
            req(1, &["https://a.com/x"], &[]),
            req(2, &["https://a.com/y#frag"], &[]),
        ];
        let h = vec![
            entry("GET", "https://A.com/x", &[], &[], 200),
            entry("GET", "https://a.com/y", &[], &[], 200),
        ];
        let d = diff_requests(&g, &h);
        assert_eq!(d.matched, 2);
        assert_eq!(d.relative_difference, 0.0);
    }

    #[test]
    fn redirect_hops_fold_into_one_request() {
        let g = vec![req(
            1,
            &["https://foo.com/img.png", "https://static.foo.com/img.png"],
            &[301],
        )];
        let h = vec![
            entry(
                "GET",
                "https://foo.com/img.png",
                &[],
                &[("Location", "https://static.foo.com/img.png")],
                301,
            ),
            entry("GET", "https://static.foo.com/img.png", &[], &[], 200),
        ];
        let d = diff_requests(&g, &h);
        assert_eq!((d.matched, d.har_only.len(), d.graph_only.len()), (1, 0, 0));
    }

    #[test]
    fn unmatched_and_internal() {
        let g = vec![
            req(1, &["https://a.com/x"], &[]),
            req(2, &["http://b.com/", "https://b.com/"], &[307]),
            req(3, &["https://race.com/"], &[]),
        ];
        let h = vec![
            entry("GET", "https://a.com/x", &[], &[], 200),
            entry("POST", "https://c.com/", &[], &[], 200),
        ];
        let d = diff_requests(&g, &h);
        assert_eq!(d.matched, 1);
        assert_eq!(d.har_only, vec![1]);
        assert_eq!(d.graph_only[0].reason, GraphOnlyReason::InternalRedirect);
        assert_eq!(d.graph_only[1].reason, GraphOnlyReason::Unmatched);
        assert_eq!((d.har_total, d.graph_total), (2, 3));
        assert!((d.relative_difference - 1.0 / 3.0).abs() < 1e-12);
    }
}
