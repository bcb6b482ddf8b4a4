use std::collections::BTreeMap;

use serde::Serialize;

use super::{EdgeType, ExecutionGraph, GraphError, NodeId};

/// One resource request reconstructed from its `request *` edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequestChain {
    pub request_id: u64,
    pub initiator: NodeId,
    /// Start URL followed by each redirect target.
    pub urls: Vec<String>,
    pub http_method: Option<String>,
    pub resource_type: Option<String>,
    /// Status of each redirect hop, aligned with `urls[1..]`.
    pub redirect_statuses: Vec<Option<u16>>,
    pub final_status: Option<u16>,
    pub completed: bool,
    pub failed: bool,
    /// `order` of the start edge.
    pub start_order: u64,
}

impl RequestChain {
    pub fn first_url(&self) -> &str {
        &self.urls[0]
    }

    pub fn final_url(&self) -> &str {
        self.urls.last().expect("a chain always has its start url")
    }

    fn terminated(&self) -> bool {
        self.completed || self.failed
    }
}

/// Groups request edges by request id, returning chains in start order.
///
/// Edges without a request id are ignored here; validation reports them.
pub fn request_chains(graph: &ExecutionGraph) -> Result<Vec<RequestChain>, GraphError> {
    let url_of = |id: NodeId| {
        graph
            .node(id)
            .and_then(|n| n.url.clone())
            .unwrap_or_default()
    };
    let mut chains: BTreeMap<u64, RequestChain> = BTreeMap::new();
    for edge in graph.edges().iter().filter(|e| e.edge_type.is_request()) {
        let Some(rid) = edge.request_id else { continue };
        if edge.edge_type == EdgeType::RequestStart {
            if chains.contains_key(&rid) {
                return Err(GraphError::Chain(rid));
            }
            chains.insert(
                rid,
                RequestChain {
                    request_id: rid,
                    initiator: edge.source,
                    urls: vec![url_of(edge.target)],
                    http_method: edge.http_method.clone(),
                    resource_type: edge.resource_type.clone(),
                    redirect_statuses: Vec::new(),
                    final_status: None,
                    completed: false,
                    failed: false,
                    start_order: edge.order,
                },
            );
            continue;
        }
        let chain = match chains.get_mut(&rid) {
            Some(c) if !c.terminated() => c,
            _ => return Err(GraphError::Chain(rid)),
        };
        match edge.edge_type {
            EdgeType::RequestRedirect => {
                chain.urls.push(url_of(edge.target));
                chain.redirect_statuses.push(edge.status);
            }
            EdgeType::RequestComplete => {
                chain.completed = true;
                chain.final_status = edge.status;
            }
            EdgeType::RequestError => {
                chain.failed = true;
                chain.final_status = edge.status;
            }
            _ => unreachable!("filtered to request edges"),
        }
    }
    let mut out: Vec<RequestChain> = chains.into_values().collect();
    out.sort_by_key(|c| (c.start_order, c.request_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixtures, GraphEdge};

    #[test]
    fn redirect_fixture_yields_two_url_chain() {
        let chains = request_chains(&fixtures::redirect_graph()).unwrap();
        assert_eq!(chains.len(), 1);
        let c = &chains[0];
        assert_eq!(
            c.urls,
            vec!["https://foo.com/img.png", "https://static.foo.com/img.png"]
        );
        assert!(c.completed);
        assert_eq!(c.final_status, Some(200));
        assert_eq!(c.initiator, 2);
    }

    #[test]
    fn in_flight_request_is_incomplete() {
        let (nodes, mut edges) = fixtures::redirect_graph().into_parts();
        edges.retain(|e| e.edge_type != EdgeType::RequestComplete);
        let g = ExecutionGraph::new(nodes, edges).unwrap();
        let c = &request_chains(&g).unwrap()[0];
        assert!(!c.completed);
        assert_eq!(c.final_status, None);
    }

    #[test]
    fn redirect_without_start_is_chain_error() {
        let (nodes, mut edges) = fixtures::redirect_graph().into_parts();
        edges.retain(|e| e.edge_type != EdgeType::RequestStart);
        let g = ExecutionGraph::new(nodes, edges).unwrap();
        assert_eq!(request_chains(&g), Err(GraphError::Chain(1)));
    }

    #[test]
    fn event_after_completion_is_chain_error() {
        let (nodes, mut edges) = fixtures::redirect_graph().into_parts();
        let mut late = GraphEdge::new(99, 4, 3, EdgeType::RequestRedirect, 50);
        late.request_id = Some(1);
        edges.push(late);
        let g = ExecutionGraph::new(nodes, edges).unwrap();
        assert_eq!(request_chains(&g), Err(GraphError::Chain(1)));
    }
}
