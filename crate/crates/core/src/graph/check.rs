use std::collections::{BTreeMap, HashMap};

use super::{EdgeType, ExecutionGraph, GraphEdge, NodeType};
use crate::report::Finding;

const MEMBER: &str = "graph";

impl ExecutionGraph {
    /// Reports every semantic invariant the graph violates. An empty result
    /// means the graph is well formed.
    pub fn issues(&self) -> Vec<Finding> {
        let mut out = Vec::new();
        self.check_nodes(&mut out);
        self.check_order(&mut out);
        self.check_requests(&mut out);
        self.check_listeners(&mut out);
        out.sort();
        out
    }

    fn check_nodes(&self, out: &mut Vec<Finding>) {
        for n in self.nodes() {
            match n.node_type {
                NodeType::HtmlElement if n.tag_name.is_none() => out.push(Finding::error(
                    MEMBER,
                    "GRAPH_ELEMENT_NO_TAG",
                    format!("html element n{} has no tag name", n.id),
                )),
                NodeType::Resource if n.url.is_none() => out.push(Finding::error(
                    MEMBER,
                    "GRAPH_RESOURCE_NO_URL",
                    format!("resource n{} has no url", n.id),
                )),
                NodeType::Script if n.script_type.is_none() => out.push(Finding::error(
                    MEMBER,
                    "GRAPH_SCRIPT_NO_TYPE",
                    format!("script n{} has no script type", n.id),
                )),
                _ => {}
            }
        }
    }

    fn check_order(&self, out: &mut Vec<Finding>) {
        for w in self.edges().windows(2) {
            if w[0].order == w[1].order {
                out.push(Finding::error(
                    MEMBER,
                    "GRAPH_ORDER_DUPLICATE",
                    format!(
                        "edges e{} and e{} share order {}",
                        w[0].id, w[1].id, w[0].order
                    ),
                ));
            } else if w[1].timestamp < w[0].timestamp {
                out.push(Finding::warning(
                    MEMBER,
                    "GRAPH_TIMESTAMP_ORDER",
                    format!(
                        "edge e{} is timestamped before its predecessor e{}",
                        w[1].id, w[0].id
                    ),
                ));
            }
        }
    }

    fn check_requests(&self, out: &mut Vec<Finding>) {
        let mut by_id: BTreeMap<u64, Vec<&GraphEdge>> = BTreeMap::new();
        for e in self.edges().iter().filter(|e| e.edge_type.is_request()) {
            match e.request_id {
                Some(rid) => by_id.entry(rid).or_default().push(e),
                None => out.push(Finding::error(
                    MEMBER,
                    "GRAPH_REQ_NO_ID",
                    format!("{} edge e{} has no request id", e.edge_type, e.id),
                )),
            }
        }
        for (rid, edges) in by_id {
            let well_formed = edges[0].edge_type == EdgeType::RequestStart
                && edges[1..].iter().enumerate().all(|(i, e)| {
                    let last = i + 2 == edges.len();
                    match e.edge_type {
                        EdgeType::RequestRedirect => true,
                        EdgeType::RequestComplete | EdgeType::RequestError => last,
                        _ => false,
                    }
                });
            if !well_formed {
                out.push(Finding::error(
                    MEMBER,
                    "GRAPH_CHAIN_BROKEN",
                    format!("request {rid} is not start -> redirect* -> complete|error"),
                ));
            }
            for e in &edges {
                let resource = match e.edge_type {
                    EdgeType::RequestStart | EdgeType::RequestRedirect => e.target,
                    _ => continue,
                };
                if let Some(url) = self.node(resource).and_then(|n| n.url.as_deref()) {
                    if url::Url::parse(url).is_err() {
                        out.push(Finding::error(
                            MEMBER,
                            "GRAPH_RELATIVE_URL",
                            format!("request {rid} url `{url}` is not absolute"),
                        ));
                    }
                }
            }
        }
    }

    fn check_listeners(&self, out: &mut Vec<Finding>) {
        let mut added: HashMap<u64, &GraphEdge> = HashMap::new();
        for e in self.edges_by_type(EdgeType::AddEventListener) {
            if let Some(id) = e.listener_id {
                added.entry(id).or_insert(e);
            }
        }
        for e in self.edges_by_type(EdgeType::EventListener) {
            let Some(add) = e.listener_id.and_then(|id| added.get(&id)) else {
                continue;
            };
            if add.key != e.key {
                out.push(Finding::error(
                    MEMBER,
                    "GRAPH_LISTENER_KEY_MISMATCH",
                    format!(
                        "listener {} registered for {:?} but fired for {:?}",
                        e.listener_id.unwrap_or_default(),
                        add.key,
                        e.key
                    ),
                ));
            }
        }
    }
}
