use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::Serialize;
use url::Url;

use super::hosts::third_party_site;
use super::{NoiseKind, Redirect, Scenario, ScenarioError, ScenarioEvent, Size, PLACEHOLDER_PNG};
use crate::bundle::{Manifest, WebBundle};
use crate::graph::{EdgeType, ExecutionGraph, GraphEdge, GraphNode, NodeId, NodeType, ScriptType};
use crate::har::{default_creator, HarArchive, HarEntry, HarPage, Header};
use crate::harfilter::FilterReason;
use crate::queries::{Adder, HandlerClass, Party, RequestContext, RequestRef};
use crate::trackers::SuffixList;

const CAPTURED_AT: &str = "2026-01-01T00:00:00Z";
const USER_AGENT: &str = "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/126.0.0.0 Safari/537.36";
const PAGE_ID: &str = "page_1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub url: String,
    pub site: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequestLabel {
    pub request: RequestRef,
    pub initiator: NodeId,
    pub hops: Vec<Hop>,
    pub method: String,
    pub context: RequestContext,
    pub party: Party,
    /// False for injected races.
    pub in_har: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HandlerLabel {
    pub listener_id: u64,
    pub element_node: NodeId,
    pub listener_script: NodeId,
    pub key: String,
    pub adder: Adder,
    pub classification: HandlerClass,
    pub frame_origin: String,
    pub cross_origin: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarLabel {
    pub url: String,
    pub method: String,
    pub reason: FilterReason,
}

/// What each query should report for the generated bundle, derived from
/// the scenario's own bookkeeping rather than from the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynthLedger {
    pub seed: u64,
    pub size: Size,
    pub site: String,
    pub page_origin: String,
    pub event_counts: BTreeMap<&'static str, usize>,
    pub nodes: usize,
    pub edge_type_counts: BTreeMap<String, usize>,
    pub documents: usize,
    pub resource_requests: usize,
    pub redirects: usize,
    /// Invocation count per API name.
    pub appearances: BTreeMap<String, u64>,
    pub handlers: Vec<HandlerLabel>,
    pub requests: Vec<RequestLabel>,
    /// HAR entries in file order with the filter verdict they should get.
    pub har: Vec<HarLabel>,
    pub races: Vec<u64>,
    /// Requests on the wire per third-party site, redirect hops counted
    /// separately, races included.
    pub third_parties: BTreeMap<String, u64>,
}

impl SynthLedger {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("ledger serializes");
        out.push(b'\n');
        out
    }

    pub fn page_context_entries(&self) -> usize {
        self.har
            .iter()
            .filter(|h| h.reason == FilterReason::PageContext)
            .count()
    }

    pub fn inline_handlers(&self) -> usize {
        self.handlers
            .iter()
            .filter(|h| h.classification == HandlerClass::Inline)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub bundle: WebBundle,
    pub ledger: SynthLedger,
}

#[derive(Clone, Copy)]
enum Creator {
    Parser,
    Script(u32),
}

struct ElementState {
    node: NodeId,
    tag: String,
    creator: Creator,
    frame: Option<u32>,
    loaded: bool,
}

struct ScriptState {
    node: NodeId,
    element: u32,
    url: Option<String>,
}

struct DocumentState {
    url: String,
    frame_id: String,
}

struct Builder<'a> {
    scenario: &'a Scenario,
    base: DateTime<Utc>,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    har: Vec<HarEntry>,
    har_labels: Vec<HarLabel>,
    elements: HashMap<u32, ElementState>,
    scripts: HashMap<u32, ScriptState>,
    documents: HashMap<u32, DocumentState>,
    extern_node: Option<NodeId>,
    next_request: u64,
    next_listener: u64,
    ledger: SynthLedger,
}

fn err(index: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError {
        index,
        message: message.into(),
    }
}

fn dest_for_tag(tag: &str) -> (&'static str, &'static str) {
    match tag {
        "IMG" => ("image", "image"),
        "SCRIPT" => ("script", "script"),
        "LINK" => ("style", "stylesheet"),
        "IFRAME" => ("iframe", "document"),
        _ => ("empty", "other"),
    }
}

impl<'a> Builder<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let base = DateTime::parse_from_rfc3339(CAPTURED_AT)
            .expect("constant timestamp")
            .with_timezone(&Utc);
        Builder {
            scenario,
            base,
            nodes: Vec::new(),
            edges: Vec::new(),
            har: Vec::new(),
            har_labels: Vec::new(),
            elements: HashMap::new(),
            scripts: HashMap::new(),
            documents: HashMap::new(),
            extern_node: None,
            next_request: 1,
            next_listener: 1,
            ledger: SynthLedger {
                seed: scenario.seed,
                size: scenario.size,
                site: scenario.site.clone(),
                page_origin: scenario.page_origin.clone(),
                event_counts: BTreeMap::new(),
                nodes: 0,
                edge_type_counts: BTreeMap::new(),
                documents: 0,
                resource_requests: 0,
                redirects: 0,
                appearances: BTreeMap::new(),
                handlers: Vec::new(),
                requests: Vec::new(),
                har: Vec::new(),
                races: Vec::new(),
                third_parties: BTreeMap::new(),
            },
        }
    }

    fn node(&mut self, node_type: NodeType) -> &mut GraphNode {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(GraphNode::new(id, node_type));
        self.nodes.last_mut().unwrap()
    }

    fn edge(&mut self, source: NodeId, target: NodeId, edge_type: EdgeType) -> &mut GraphEdge {
        let id = self.edges.len() as u64;
        let mut e = GraphEdge::new(id, source, target, edge_type, id);
        e.timestamp = self.base.timestamp_millis() + 5 * id as i64;
        *self
            .ledger
            .edge_type_counts
            .entry(edge_type.as_str().to_string())
            .or_insert(0) += 1;
        self.edges.push(e);
        self.edges.last_mut().unwrap()
    }

    fn site_of(&self, url: &str) -> String {
        let host = Url::parse(url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_default();
        let own = &self.scenario.site;
        if host == *own || host.ends_with(&format!(".{own}")) {
            return own.clone();
        }
        match third_party_site(&host) {
            Some(site) => site.to_string(),
            // Hand-written scenarios may use hosts outside the table.
            None => SuffixList::bundled().site(&host),
        }
    }

    fn origin_of(url: &str) -> String {
        Url::parse(url)
            .map(|u| u.origin().ascii_serialization())
            .unwrap_or_default()
    }

    fn party_for_site(&self, site: String) -> Party {
        if site == self.scenario.site {
            Party::FirstParty
        } else {
            Party::Site(site)
        }
    }

    fn script_party(&self, script: u32) -> Party {
        let s = &self.scripts[&script];
        match &s.url {
            Some(url) => self.party_for_site(self.site_of(url)),
            None => self.element_party(s.element),
        }
    }

    fn element_party(&self, element: u32) -> Party {
        match self.elements[&element].creator {
            Creator::Parser => Party::FirstParty,
            Creator::Script(s) => self.script_party(s),
        }
    }

    fn element_context(&self, element: u32) -> RequestContext {
        let e = &self.elements[&element];
        match e.creator {
            Creator::Parser => RequestContext::Parser,
            Creator::Script(_) => match e.tag.as_str() {
                "SCRIPT" => RequestContext::ScriptElement,
                "IMG" => RequestContext::ImgElement,
                other => RequestContext::Other(other.to_string()),
            },
        }
    }

    fn hops(&self, urls: &[String]) -> Vec<Hop> {
        urls.iter()
            .map(|u| Hop {
                url: u.clone(),
                site: self.site_of(u),
            })
            .collect()
    }

    fn har_entry(
        &mut self,
        method: &str,
        url: &str,
        request_headers: &[(&str, &str)],
        status: u16,
        location: Option<&str>,
        reason: FilterReason,
    ) {
        let t = self.base + Duration::milliseconds(10 * (self.har.len() as i64 + 1));
        let mut e = HarEntry::new(t.to_rfc3339_opts(SecondsFormat::Millis, true), method, url);
        e.request_headers = request_headers
            .iter()
            .map(|(n, v)| Header::new(*n, *v))
            .collect();
        e.response_status = status;
        if let Some(loc) = location {
            e.response_headers.push(Header::new("Location", loc));
            e.response_body_size = 0;
        } else {
            e.response_body_size = if status == 101 || status == 204 {
                0
            } else {
                512
            };
        }
        e.pageref = Some(PAGE_ID.into());
        self.har.push(e);
        self.har_labels.push(HarLabel {
            url: url.to_string(),
            method: method.to_string(),
            reason,
        });
    }

    /// A start/redirect/complete chain from `initiator`, with one HAR entry
    /// per hop unless `in_har` is false.
    #[allow(clippy::too_many_arguments)]
    fn chain(
        &mut self,
        initiator: NodeId,
        method: &str,
        url: &str,
        redirects: &[Redirect],
        status: u16,
        tag: &str,
        in_har: bool,
    ) -> (u64, Vec<String>) {
        let rid = self.next_request;
        self.next_request += 1;
        let (dest, resource_type) = dest_for_tag(tag);
        let mut urls = vec![url.to_string()];
        urls.extend(redirects.iter().map(|r| r.url.clone()));
        let mut resources = Vec::with_capacity(urls.len());
        for u in &urls {
            let n = self.node(NodeType::Resource);
            n.url = Some(u.clone());
            resources.push(n.id);
        }
        let start = self.edge(initiator, resources[0], EdgeType::RequestStart);
        start.request_id = Some(rid);
        start.http_method = Some(method.to_string());
        start.resource_type = Some(resource_type.to_string());
        for (i, r) in redirects.iter().enumerate() {
            let e = self.edge(resources[i], resources[i + 1], EdgeType::RequestRedirect);
            e.request_id = Some(rid);
            e.status = Some(r.status);
            self.ledger.redirects += 1;
        }
        let done = self.edge(
            *resources.last().unwrap(),
            initiator,
            EdgeType::RequestComplete,
        );
        done.request_id = Some(rid);
        done.status = Some(status);
        if in_har {
            for (i, u) in urls.iter().enumerate() {
                let hop_method = if i == 0 { method } else { "GET" };
                match redirects.get(i) {
                    Some(r) => {
                        let next = urls[i + 1].clone();
                        self.har_entry(
                            hop_method,
                            u,
                            &[("Sec-Fetch-Dest", dest)],
                            r.status,
                            Some(&next),
                            FilterReason::PageContext,
                        )
                    }
                    None => self.har_entry(
                        hop_method,
                        u,
                        &[("Sec-Fetch-Dest", dest)],
                        status,
                        None,
                        FilterReason::PageContext,
                    ),
                }
            }
        }
        self.ledger.resource_requests += 1;
        (rid, urls)
    }

    fn fresh<T>(
        map: &HashMap<u32, T>,
        handle: u32,
        what: &str,
        index: usize,
    ) -> Result<(), ScenarioError> {
        if map.contains_key(&handle) {
            Err(err(index, format!("{what} {handle} introduced twice")))
        } else {
            Ok(())
        }
    }

    fn element(&self, handle: u32, index: usize) -> Result<&ElementState, ScenarioError> {
        self.elements
            .get(&handle)
            .ok_or_else(|| err(index, format!("element {handle} does not exist yet")))
    }

    fn script(&self, handle: u32, index: usize) -> Result<&ScriptState, ScenarioError> {
        self.scripts
            .get(&handle)
            .ok_or_else(|| err(index, format!("script {handle} does not exist yet")))
    }

    fn extern_node(&mut self) -> NodeId {
        if let Some(n) = self.extern_node {
            return n;
        }
        let n = self.node(NodeType::Extern).id;
        self.extern_node = Some(n);
        n
    }

    fn frame_origin(&self, element: u32) -> String {
        match self.elements[&element].frame {
            Some(d) => Self::origin_of(&self.documents[&d].url),
            None => self.scenario.page_origin.clone(),
        }
    }

    fn listener(
        &mut self,
        adder: NodeId,
        element: u32,
        handler: NodeId,
        key: &str,
        adder_label: Adder,
        class: HandlerClass,
    ) {
        let lid = self.next_listener;
        self.next_listener += 1;
        let element_node = self.elements[&element].node;
        let add = self.edge(adder, element_node, EdgeType::AddEventListener);
        add.key = Some(key.to_string());
        add.listener_id = Some(lid);
        let fire = self.edge(element_node, handler, EdgeType::EventListener);
        fire.key = Some(key.to_string());
        fire.listener_id = Some(lid);
        let frame_origin = self.frame_origin(element);
        self.ledger.handlers.push(HandlerLabel {
            listener_id: lid,
            element_node,
            listener_script: handler,
            key: key.to_string(),
            adder: adder_label,
            classification: class,
            cross_origin: frame_origin != self.scenario.page_origin,
            frame_origin,
        });
    }

    fn add_element(
        &mut self,
        handle: u32,
        tag: &str,
        creator: Creator,
        frame: Option<u32>,
        attrs: &BTreeMap<String, String>,
    ) -> NodeId {
        let frame_id = frame.map(|d| self.documents[&d].frame_id.clone());
        let n = self.node(NodeType::HtmlElement);
        n.tag_name = Some(tag.to_ascii_uppercase());
        n.frame_id = frame_id;
        n.attributes = attrs.clone();
        let node = n.id;
        self.elements.insert(
            handle,
            ElementState {
                node,
                tag: tag.to_ascii_uppercase(),
                creator,
                frame,
                loaded: false,
            },
        );
        node
    }

    fn apply(
        &mut self,
        index: usize,
        event: &ScenarioEvent,
        parser: NodeId,
    ) -> Result<(), ScenarioError> {
        match event {
            ScenarioEvent::InitialRedirect { .. } => {
                return Err(err(
                    index,
                    "initial redirects must precede every other event",
                ));
            }
            ScenarioEvent::ParserCreatesElement {
                element,
                tag,
                attrs,
                frame,
            } => {
                Self::fresh(&self.elements, *element, "element", index)?;
                if let Some(d) = frame {
                    if !self.documents.contains_key(d) {
                        return Err(err(index, format!("document {d} does not exist yet")));
                    }
                }
                let node = self.add_element(*element, tag, Creator::Parser, *frame, attrs);
                self.edge(parser, node, EdgeType::CreateNode);
            }
            ScenarioEvent::ScriptCreatesElement {
                script,
                element,
                tag,
            } => {
                Self::fresh(&self.elements, *element, "element", index)?;
                let by = self.script(*script, index)?.node;
                let node = self.add_element(
                    *element,
                    tag,
                    Creator::Script(*script),
                    None,
                    &BTreeMap::new(),
                );
                self.edge(by, node, EdgeType::CreateNode);
            }
            ScenarioEvent::ScriptLoaded {
                script,
                element,
                url,
            } => {
                Self::fresh(&self.scripts, *script, "script", index)?;
                let el = self.element(*element, index)?;
                if el.tag != "SCRIPT" || el.loaded {
                    return Err(err(
                        index,
                        format!("element {element} is not an unused SCRIPT element"),
                    ));
                }
                let (el_node, context) = (el.node, self.element_context(*element));
                if let Some(u) = url {
                    let (rid, urls) = self.chain(el_node, "GET", u, &[], 200, "SCRIPT", true);
                    let label = RequestLabel {
                        request: RequestRef::Resource(rid),
                        initiator: el_node,
                        hops: self.hops(&urls),
                        method: "GET".into(),
                        context,
                        party: self.element_party(*element),
                        in_har: true,
                    };
                    self.ledger.requests.push(label);
                }
                let n = self.node(NodeType::Script);
                n.url = url.clone();
                n.script_type = Some(if url.is_some() {
                    ScriptType::External
                } else {
                    ScriptType::Inline
                });
                let script_node = n.id;
                self.edge(el_node, script_node, EdgeType::Execute);
                self.elements.get_mut(element).unwrap().loaded = true;
                self.scripts.insert(
                    *script,
                    ScriptState {
                        node: script_node,
                        element: *element,
                        url: url.clone(),
                    },
                );
            }
            ScenarioEvent::ScriptCallsApi { script, api, times } => {
                let by = self.script(*script, index)?.node;
                if *times == 0 {
                    return Err(err(index, "api call count must be positive"));
                }
                let target = self.extern_node();
                for _ in 0..*times {
                    self.edge(by, target, EdgeType::JsCall).method_name = Some(api.clone());
                }
                *self.ledger.appearances.entry(api.clone()).or_insert(0) += u64::from(*times);
            }
            ScenarioEvent::ScriptAddsListener {
                script,
                element,
                key,
                inline,
            } => {
                let by = self.script(*script, index)?.node;
                self.element(*element, index)?;
                if *inline {
                    let h = self.node(NodeType::Script);
                    h.script_type = Some(ScriptType::Unknown);
                    h.attributes.insert("source".into(), format!("on_{key}()"));
                    let handler = h.id;
                    self.listener(
                        by,
                        *element,
                        handler,
                        key,
                        Adder::Script(by),
                        HandlerClass::Inline,
                    );
                } else {
                    self.listener(
                        by,
                        *element,
                        by,
                        key,
                        Adder::Script(by),
                        HandlerClass::Programmatic,
                    );
                }
            }
            ScenarioEvent::ParserAddsListener { element, key } => {
                self.element(*element, index)?;
                let h = self.node(NodeType::Script);
                h.script_type = Some(ScriptType::Unknown);
                h.attributes.insert("source".into(), format!("on_{key}()"));
                let handler = h.id;
                self.listener(
                    parser,
                    *element,
                    handler,
                    key,
                    Adder::Parser,
                    HandlerClass::Inline,
                );
            }
            ScenarioEvent::ElementRequests {
                element,
                url,
                redirects,
                status,
            } => {
                let el = self.element(*element, index)?;
                let (node, tag) = (el.node, el.tag.clone());
                let (rid, urls) = self.chain(node, "GET", url, redirects, *status, &tag, true);
                let label = RequestLabel {
                    request: RequestRef::Resource(rid),
                    initiator: node,
                    hops: self.hops(&urls),
                    method: "GET".into(),
                    context: self.element_context(*element),
                    party: self.element_party(*element),
                    in_har: true,
                };
                self.ledger.requests.push(label);
            }
            ScenarioEvent::InjectRace { element, url } => {
                let el = self.element(*element, index)?;
                let (node, tag) = (el.node, el.tag.clone());
                let (rid, urls) = self.chain(node, "GET", url, &[], 200, &tag, false);
                let label = RequestLabel {
                    request: RequestRef::Resource(rid),
                    initiator: node,
                    hops: self.hops(&urls),
                    method: "GET".into(),
                    context: self.element_context(*element),
                    party: self.element_party(*element),
                    in_har: false,
                };
                self.ledger.requests.push(label);
                self.ledger.races.push(rid);
            }
            ScenarioEvent::FetchRequest {
                script,
                url,
                method,
                api,
            } => {
                let by = self.script(*script, index)?.node;
                let target = self.extern_node();
                self.edge(by, target, EdgeType::JsCall).method_name = Some(api.clone());
                *self.ledger.appearances.entry(api.clone()).or_insert(0) += 1;
                let (rid, urls) = self.chain(by, method, url, &[], 200, "", true);
                let label = RequestLabel {
                    request: RequestRef::Resource(rid),
                    initiator: by,
                    hops: self.hops(&urls),
                    method: method.clone(),
                    context: RequestContext::FetchXhr,
                    party: self.script_party(*script),
                    in_har: true,
                };
                self.ledger.requests.push(label);
            }
            ScenarioEvent::DocumentEmbedded {
                element,
                document,
                url,
            } => {
                Self::fresh(&self.documents, *document, "document", index)?;
                let el = self.element(*element, index)?;
                if el.tag != "IFRAME" || el.loaded {
                    return Err(err(
                        index,
                        format!("element {element} is not an unused IFRAME element"),
                    ));
                }
                let el_node = el.node;
                let frame_id = format!("frame-{document}");
                let d = self.node(NodeType::Document);
                d.url = Some(url.clone());
                d.frame_id = Some(frame_id.clone());
                let doc_node = d.id;
                self.edge(el_node, doc_node, EdgeType::Structure);
                self.elements.get_mut(element).unwrap().loaded = true;
                self.documents.insert(
                    *document,
                    DocumentState {
                        url: url.clone(),
                        frame_id,
                    },
                );
                self.har_entry(
                    "GET",
                    url,
                    &[("Sec-Fetch-Dest", "iframe")],
                    200,
                    None,
                    FilterReason::PageContext,
                );
                self.ledger.documents += 1;
                let label = RequestLabel {
                    request: RequestRef::Document(doc_node),
                    initiator: el_node,
                    hops: self.hops(std::slice::from_ref(url)),
                    method: "GET".into(),
                    context: self.element_context(*element),
                    party: self.element_party(*element),
                    in_har: true,
                };
                self.ledger.requests.push(label);
            }
            ScenarioEvent::HarNoise { noise, url } => {
                let origin = self.scenario.page_origin.clone();
                match noise {
                    NoiseKind::Preflight => self.har_entry(
                        "OPTIONS",
                        url,
                        &[
                            ("Access-Control-Request-Method", "POST"),
                            ("Origin", &origin),
                            ("Sec-Fetch-Dest", "empty"),
                        ],
                        204,
                        None,
                        FilterReason::Preflight,
                    ),
                    NoiseKind::CspReport => self.har_entry(
                        "POST",
                        url,
                        &[("Sec-Fetch-Dest", "report")],
                        204,
                        None,
                        FilterReason::CspReport,
                    ),
                    NoiseKind::WebSocket => self.har_entry(
                        "GET",
                        url,
                        &[("Upgrade", "websocket"), ("Connection", "Upgrade")],
                        101,
                        None,
                        FilterReason::WebSocketUpgrade,
                    ),
                    NoiseKind::BrowserInternal => {
                        self.har_entry("POST", url, &[], 200, None, FilterReason::BrowserInternal)
                    }
                    NoiseKind::ServiceWorker => self.har_entry(
                        "GET",
                        url,
                        &[("Sec-Fetch-Dest", "serviceworker")],
                        200,
                        None,
                        FilterReason::ServiceWorker,
                    ),
                }
            }
        }
        Ok(())
    }
}

/// Builds the bundle and its ledger.
///
/// Every page-context HAR entry corresponds to a graph request and vice
/// versa, except for injected races, which exist only in the graph.
pub fn scenario_to_bundle(scenario: &Scenario) -> Result<SynthBundle, ScenarioError> {
    let mut b = Builder::new(scenario);
    let final_url = scenario.final_url();
    let parser = b.node(NodeType::Parser).id;
    let root = {
        let d = b.node(NodeType::Document);
        d.url = Some(final_url.clone());
        d.id
    };
    b.edge(parser, root, EdgeType::Structure);

    let leading: Vec<(&String, u16)> = scenario
        .events
        .iter()
        .map_while(|e| match e {
            ScenarioEvent::InitialRedirect { url, status } => Some((url, *status)),
            _ => None,
        })
        .collect();
    for (i, (url, status)) in leading.iter().enumerate() {
        let next = leading
            .get(i + 1)
            .map(|(u, _)| (*u).clone())
            .unwrap_or_else(|| final_url.clone());
        b.har_entry(
            "GET",
            url,
            &[("Sec-Fetch-Dest", "document")],
            *status,
            Some(&next),
            FilterReason::InitialDocumentRedirect,
        );
    }
    b.har_entry(
        "GET",
        &final_url,
        &[("Sec-Fetch-Dest", "document")],
        200,
        None,
        FilterReason::PageContext,
    );
    b.ledger.documents += 1;
    b.ledger.requests.push(RequestLabel {
        request: RequestRef::Document(root),
        initiator: parser,
        hops: b.hops(std::slice::from_ref(&final_url)),
        method: "GET".into(),
        context: RequestContext::Parser,
        party: Party::FirstParty,
        in_har: true,
    });

    for (index, event) in scenario.events.iter().enumerate().skip(leading.len()) {
        b.apply(index, event, parser)?;
    }
    for e in &scenario.events {
        *b.ledger.event_counts.entry(e.label()).or_insert(0) += 1;
    }

    let page_site = scenario.site.clone();
    for r in &b.ledger.requests {
        for h in &r.hops {
            if h.site != page_site {
                *b.ledger.third_parties.entry(h.site.clone()).or_insert(0) += 1;
            }
        }
    }
    b.ledger.nodes = b.nodes.len();
    b.ledger.har = std::mem::take(&mut b.har_labels);

    let graph = ExecutionGraph::new(std::mem::take(&mut b.nodes), std::mem::take(&mut b.edges))
        .map_err(|e| err(scenario.events.len(), e.to_string()))?;
    let mut har = HarArchive {
        pages: vec![HarPage {
            id: PAGE_ID.into(),
            started_at: CAPTURED_AT.into(),
            title: final_url.clone(),
            extra: Default::default(),
        }],
        entries: std::mem::take(&mut b.har),
        extra: [("creator".to_string(), default_creator())]
            .into_iter()
            .collect(),
    };
    har.sort_entries();
    let manifest = Manifest {
        initial_url: leading
            .first()
            .map(|(u, _)| (*u).clone())
            .unwrap_or_else(|| final_url.clone()),
        final_url,
        captured_at: CAPTURED_AT.into(),
        tool_version: concat!("webbundle-synth ", env!("CARGO_PKG_VERSION")).into(),
        user_agent: USER_AGENT.into(),
        page_origin: scenario.page_origin.clone(),
    };
    Ok(SynthBundle {
        bundle: WebBundle {
            manifest,
            har,
            graph,
            screenshot: Some(PLACEHOLDER_PNG.to_vec()),
        },
        ledger: b.ledger,
    })
}
