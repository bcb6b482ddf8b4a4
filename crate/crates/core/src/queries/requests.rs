use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};
use url::Url;

use crate::graph::{request_chains, EdgeType, ExecutionGraph, GraphError, NodeId, NodeType};
use crate::trackers::SuffixList;

/// Identifies a request: a document load by its node, a resource load by
/// its request id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RequestRef {
    Document(NodeId),
    Resource(u64),
}

impl fmt::Display for RequestRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestRef::Document(n) => write!(f, "document:{n}"),
            RequestRef::Resource(r) => write!(f, "request:{r}"),
        }
    }
}

impl Serialize for RequestRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RequestContext {
    ScriptElement,
    ImgElement,
    FetchXhr,
    Parser,
    Other(String),
}

impl fmt::Display for RequestContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestContext::ScriptElement => f.write_str("Script Element"),
            RequestContext::ImgElement => f.write_str("IMG Element"),
            RequestContext::FetchXhr => f.write_str("Fetch/XHR"),
            RequestContext::Parser => f.write_str("Parser"),
            RequestContext::Other(tag) => write!(f, "Other({tag})"),
        }
    }
}

impl Serialize for RequestContext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The party whose code caused a request.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    FirstParty,
    Site(String),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::FirstParty => f.write_str("FIRST_PARTY"),
            Party::Site(s) => f.write_str(s),
        }
    }
}

impl Serialize for Party {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributedRequest {
    pub request: RequestRef,
    /// The node that issued the request: the element, script, or parser for
    /// resources, the embedding element for documents.
    pub initiator: NodeId,
    pub first_url: String,
    pub final_url: String,
    /// Every URL of the chain, redirect hops included.
    pub urls: Vec<String>,
    pub http_method: String,
    pub redirect_statuses: Vec<Option<u16>>,
    pub completed: bool,
    pub context: Option<RequestContext>,
    pub responsible_party: Option<Party>,
}

impl AttributedRequest {
    /// A chain with a 307 hop, which the browser may satisfy internally
    /// (HSTS upgrades and the like) without anything reaching the wire.
    pub fn has_internal_redirect(&self) -> bool {
        self.redirect_statuses.contains(&Some(307))
    }
}

/// Document loads followed by resource chains.
///
/// Document records come from document-node URLs (the page plus embedded
/// documents), in node order. Resource records come from request chains in
/// start order.
pub fn extract_requests(graph: &ExecutionGraph) -> Result<Vec<AttributedRequest>, GraphError> {
    let mut out = Vec::new();
    for doc in graph
        .nodes()
        .iter()
        .filter(|n| n.node_type == NodeType::Document)
    {
        let Some(url) = doc.url.clone() else { continue };
        let initiator = graph
            .incoming(doc.id)
            .find(|e| e.edge_type == EdgeType::Structure)
            .map(|e| e.source)
            .unwrap_or(doc.id);
        out.push(AttributedRequest {
            request: RequestRef::Document(doc.id),
            initiator,
            first_url: url.clone(),
            final_url: url.clone(),
            urls: vec![url],
            http_method: "GET".into(),
            redirect_statuses: Vec::new(),
            completed: true,
            context: None,
            responsible_party: None,
        });
    }
    for chain in request_chains(graph)? {
        out.push(AttributedRequest {
            request: RequestRef::Resource(chain.request_id),
            initiator: chain.initiator,
            first_url: chain.first_url().to_string(),
            final_url: chain.final_url().to_string(),
            http_method: chain.http_method.clone().unwrap_or_else(|| "GET".into()),
            redirect_statuses: chain.redirect_statuses.clone(),
            completed: chain.completed,
            urls: chain.urls,
            context: None,
            responsible_party: None,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributionWarning {
    pub request: RequestRef,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attribution {
    pub requests: Vec<AttributedRequest>,
    pub warnings: Vec<AttributionWarning>,
}

fn is_fetch_or_xhr(api: &str) -> bool {
    api == "fetch" || api.ends_with(".fetch") || api.starts_with("XMLHttpRequest.")
}

fn host_of(url: &str) -> Option<String> {
    Url::parse(url).ok()?.host_str().map(str::to_string)
}

/// Walks `create node` and `execute` edges backwards from `start` to the
/// nearest script with a source URL. Reaching the parser means the page
/// itself is responsible.
fn provenance_party(
    graph: &ExecutionGraph,
    start: NodeId,
    page_site: &str,
    suffixes: &SuffixList,
) -> Result<Party, String> {
    let mut visited = HashSet::new();
    let mut current = start;
    loop {
        if !visited.insert(current) {
            return Err(format!("provenance cycle at n{current}"));
        }
        let node = graph
            .node(current)
            .ok_or_else(|| format!("unknown node n{current}"))?;
        match node.node_type {
            NodeType::Parser => return Ok(Party::FirstParty),
            NodeType::Script => {
                if let Some(host) = node.url.as_deref().and_then(host_of) {
                    let site = suffixes.site(&host);
                    return Ok(if site == page_site {
                        Party::FirstParty
                    } else {
                        Party::Site(site)
                    });
                }
            }
            _ => {}
        }
        let parent = graph
            .incoming(current)
            .find(|e| matches!(e.edge_type, EdgeType::CreateNode | EdgeType::Execute))
            .map(|e| e.source);
        current = parent.ok_or_else(|| format!("no creator for n{current}"))?;
    }
}

fn creator(graph: &ExecutionGraph, node: NodeId) -> Option<NodeId> {
    graph
        .incoming(node)
        .find(|e| e.edge_type == EdgeType::CreateNode)
        .map(|e| e.source)
}

fn start_order(graph: &ExecutionGraph, request: &AttributedRequest) -> Option<u64> {
    let RequestRef::Resource(rid) = request.request else {
        return None;
    };
    graph
        .outgoing(request.initiator)
        .find(|e| e.edge_type == EdgeType::RequestStart && e.request_id == Some(rid))
        .map(|e| e.order)
}

/// Context from initiator topology alone. `Err` carries the fallback
/// context when provenance cannot be resolved.
fn context_of(
    graph: &ExecutionGraph,
    request: &AttributedRequest,
) -> Result<RequestContext, (RequestContext, String)> {
    let Some(node) = graph.node(request.initiator) else {
        return Err((
            RequestContext::Other("unknown".into()),
            "initiator missing".into(),
        ));
    };
    match node.node_type {
        NodeType::Parser => Ok(RequestContext::Parser),
        NodeType::HtmlElement => {
            let tag = node
                .tag_name
                .clone()
                .unwrap_or_default()
                .to_ascii_uppercase();
            let by = creator(graph, node.id).and_then(|c| graph.node(c));
            match by.map(|n| n.node_type) {
                Some(NodeType::Parser) => Ok(RequestContext::Parser),
                Some(NodeType::Script) => Ok(match tag.as_str() {
                    "SCRIPT" => RequestContext::ScriptElement,
                    "IMG" => RequestContext::ImgElement,
                    _ => RequestContext::Other(tag),
                }),
                Some(_) => Ok(RequestContext::Other(tag)),
                None => Err((
                    RequestContext::Other(tag),
                    format!("element n{} has no creator", node.id),
                )),
            }
        }
        NodeType::Script => {
            let before = start_order(graph, request).unwrap_or(u64::MAX);
            let last_call = graph
                .outgoing(node.id)
                .filter(|e| e.edge_type == EdgeType::JsCall && e.order < before)
                .last();
            if last_call
                .and_then(|e| e.method_name.as_deref())
                .is_some_and(is_fetch_or_xhr)
            {
                Ok(RequestContext::FetchXhr)
            } else {
                Ok(RequestContext::Other("script".into()))
            }
        }
        other => Ok(RequestContext::Other(other.as_str().to_string())),
    }
}

fn other_context(graph: &ExecutionGraph, node: NodeId) -> RequestContext {
    let label = graph.node(node).map(|n| match &n.tag_name {
        Some(tag) => tag.to_ascii_uppercase(),
        None => n.node_type.as_str().to_string(),
    });
    RequestContext::Other(label.unwrap_or_else(|| "unknown".into()))
}

/// Resolves context and responsible party for every extracted request.
/// Only graph topology is used; request headers such as `Referer` are not
/// consulted.
pub fn attribute_requests(
    graph: &ExecutionGraph,
    page_origin: &str,
    suffixes: &SuffixList,
) -> Result<Attribution, GraphError> {
    let page_site = host_of(page_origin)
        .map(|h| suffixes.site(&h))
        .unwrap_or_default();
    let mut requests = extract_requests(graph)?;
    let mut warnings = Vec::new();
    for r in &mut requests {
        let resolved = context_of(graph, r).and_then(|c| {
            provenance_party(graph, r.initiator, &page_site, suffixes)
                .map(|p| (c, p))
                .map_err(|m| (other_context(graph, r.initiator), m))
        });
        let (context, party) = resolved.unwrap_or_else(|(fallback, message)| {
            warnings.push(AttributionWarning {
                request: r.request,
                message,
            });
            (fallback, Party::FirstParty)
        });
        r.context = Some(context);
        r.responsible_party = Some(party);
    }
    Ok(Attribution { requests, warnings })
}

/// One row of the context-by-party breakdown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttributionGroup {
    pub context: RequestContext,
    pub responsible_party: Party,
    pub requests: u64,
    pub origins: usize,
}

/// Groups requests towards one registrable domain by context and
/// responsible party, counting requests and distinct page origins.
/// Mergeable across bundles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributionTable {
    groups: BTreeMap<(RequestContext, Party), (u64, BTreeSet<String>)>,
    total: u64,
}

impl AttributionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the requests whose first URL falls under `target`.
    pub fn add(
        &mut self,
        page_origin: &str,
        requests: &[AttributedRequest],
        target: &str,
        suffixes: &SuffixList,
    ) {
        for r in requests {
            let Some(host) = host_of(&r.first_url) else {
                continue;
            };
            if suffixes.site(&host) != target {
                continue;
            }
            let (Some(c), Some(p)) = (r.context.clone(), r.responsible_party.clone()) else {
                continue;
            };
            let slot = self.groups.entry((c, p)).or_default();
            slot.0 += 1;
            slot.1.insert(page_origin.to_string());
            self.total += 1;
        }
    }

    pub fn merge(&mut self, other: AttributionTable) {
        self.total += other.total;
        for (k, (n, origins)) in other.groups {
            let slot = self.groups.entry(k).or_default();
            slot.0 += n;
            slot.1.extend(origins);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Rows grouped by context; within a context, most requests first,
    /// ties by party name.
    pub fn rows(&self) -> Vec<AttributionGroup> {
        let mut rows: Vec<AttributionGroup> = self
            .groups
            .iter()
            .map(|((c, p), (n, o))| AttributionGroup {
                context: c.clone(),
                responsible_party: p.clone(),
                requests: *n,
                origins: o.len(),
            })
            .collect();
        rows.sort_by(|a, b| {
            a.context
                .cmp(&b.context)
                .then(b.requests.cmp(&a.requests))
                .then_with(|| {
                    a.responsible_party
                        .to_string()
                        .cmp(&b.responsible_party.to_string())
                })
        });
        rows
    }
}
