//! The page-execution graph: a directed multigraph of actors (parser,
//! scripts, elements) connected by typed, totally ordered actions.

mod chains;
mod check;
mod graphml;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chains::{request_chains, RequestChain};

pub use graphml::{parse_graphml, serialize_graphml};

pub type NodeId = u64;
pub type EdgeId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("malformed GraphML at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error on `{element}`: {key}")]
    Schema { element: String, key: String },
    #[error("broken request chain for request id {0}")]
    Chain(u64),
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("unknown {} `{}`", stringify!($name), other)),
                }
            }
        }
    };
}

string_enum!(
    NodeType {
        Parser => "parser",
        Document => "document",
        HtmlElement => "html element",
        Script => "script",
        Resource => "resource",
        Storage => "storage",
        Extern => "extern",
    }
);

string_enum!(
    ScriptType {
        Unknown => "unknown",
        External => "external",
        Inline => "inline",
        Module => "module",
    }
);

string_enum!(
    /// Edge types use the lowercase-with-spaces spelling of the GraphML profile.
    EdgeType {
        Structure => "structure",
        CreateNode => "create node",
        SetAttribute => "set attribute",
        Execute => "execute",
        JsCall => "js call",
        JsResult => "js result",
        RequestStart => "request start",
        RequestRedirect => "request redirect",
        RequestComplete => "request complete",
        RequestError => "request error",
        AddEventListener => "add event listener",
        RemoveEventListener => "remove event listener",
        EventListener => "event listener",
    }
);

impl EdgeType {
    pub fn is_request(self) -> bool {
        matches!(
            self,
            EdgeType::RequestStart
                | EdgeType::RequestRedirect
                | EdgeType::RequestComplete
                | EdgeType::RequestError
        )
    }

    pub fn is_listener(self) -> bool {
        matches!(
            self,
            EdgeType::AddEventListener | EdgeType::RemoveEventListener | EdgeType::EventListener
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub node_type: NodeType,
    pub tag_name: Option<String>,
    pub url: Option<String>,
    pub script_type: Option<ScriptType>,
    pub frame_id: Option<String>,
    /// Data keys outside the fixed profile, preserved verbatim.
    pub attributes: BTreeMap<String, String>,
}

impl GraphNode {
    pub fn new(id: NodeId, node_type: NodeType) -> Self {
        GraphNode {
            id,
            node_type,
            tag_name: None,
            url: None,
            script_type: None,
            frame_id: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn is_tag(&self, tag: &str) -> bool {
        self.node_type == NodeType::HtmlElement
            && self
                .tag_name
                .as_deref()
                .is_some_and(|t| t.eq_ignore_ascii_case(tag))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: EdgeId,
    pub source: NodeId,
    pub target: NodeId,
    pub edge_type: EdgeType,
    pub order: u64,
    /// Milliseconds since navigation start.
    pub timestamp: i64,
    pub key: Option<String>,
    pub args: Option<String>,
    pub method_name: Option<String>,
    pub request_id: Option<u64>,
    pub http_method: Option<String>,
    pub status: Option<u16>,
    pub resource_type: Option<String>,
    pub listener_id: Option<u64>,
    pub attributes: BTreeMap<String, String>,
}

impl GraphEdge {
    pub fn new(
        id: EdgeId,
        source: NodeId,
        target: NodeId,
        edge_type: EdgeType,
        order: u64,
    ) -> Self {
        GraphEdge {
            id,
            source,
            target,
            edge_type,
            order,
            timestamp: 0,
            key: None,
            args: None,
            method_name: None,
            request_id: None,
            http_method: None,
            status: None,
            resource_type: None,
            listener_id: None,
            attributes: BTreeMap::new(),
        }
    }
}

/// An immutable execution graph.
///
/// Nodes are kept sorted by id and edges by `(order, id)`. Construction
/// rejects duplicate ids, dangling edge endpoints, `js call` edges without a
/// method name, and graphs without exactly one root document. The remaining
/// semantic invariants are reported by [`ExecutionGraph::issues`].
#[derive(Debug, Clone)]
pub struct ExecutionGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    root_document: NodeId,
    node_index: HashMap<NodeId, usize>,
    incoming: HashMap<NodeId, Vec<usize>>,
    outgoing: HashMap<NodeId, Vec<usize>>,
}

impl PartialEq for ExecutionGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.root_document == other.root_document
    }
}

impl Eq for ExecutionGraph {}

impl ExecutionGraph {
    pub fn new(mut nodes: Vec<GraphNode>, mut edges: Vec<GraphEdge>) -> Result<Self, GraphError> {
        nodes.sort_by_key(|n| n.id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(GraphError::Schema {
                element: format!("n{}", w[0].id),
                key: "duplicate node id".into(),
            });
        }
        let node_index: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

        edges.sort_by_key(|e| e.id);
        if let Some(w) = edges.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(GraphError::Schema {
                element: format!("e{}", w[0].id),
                key: "duplicate edge id".into(),
            });
        }
        for e in &edges {
            for endpoint in [e.source, e.target] {
                if !node_index.contains_key(&endpoint) {
                    return Err(GraphError::Schema {
                        element: format!("e{}", e.id),
                        key: format!("unknown node n{endpoint}"),
                    });
                }
            }
            if e.edge_type == EdgeType::JsCall && e.method_name.is_none() {
                return Err(GraphError::Schema {
                    element: format!("e{}", e.id),
                    key: "method name".into(),
                });
            }
        }
        edges.sort_by_key(|e| (e.order, e.id));

        let root_document = find_root_document(&nodes, &edges, &node_index)?;
        let mut incoming: HashMap<NodeId, Vec<usize>> = HashMap::new();
        let mut outgoing: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            incoming.entry(e.target).or_default().push(i);
            outgoing.entry(e.source).or_default().push(i);
        }
        Ok(ExecutionGraph {
            nodes,
            edges,
            root_document,
            node_index,
            incoming,
            outgoing,
        })
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    /// Edges in event order.
    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn root_document(&self) -> &GraphNode {
        self.node(self.root_document)
            .expect("root document is validated at construction")
    }

    pub fn node(&self, id: NodeId) -> Option<&GraphNode> {
        self.node_index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn parser(&self) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.node_type == NodeType::Parser)
    }

    /// All and only the edges of type `edge_type`, in event order.
    pub fn edges_by_type(&self, edge_type: EdgeType) -> Vec<&GraphEdge> {
        self.edges
            .iter()
            .filter(|e| e.edge_type == edge_type)
            .collect()
    }

    /// Edges ending at `node`, in event order.
    pub fn incoming(&self, node: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.incoming
            .get(&node)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    /// Edges leaving `node`, in event order.
    pub fn outgoing(&self, node: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.outgoing
            .get(&node)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    pub fn into_parts(self) -> (Vec<GraphNode>, Vec<GraphEdge>) {
        (self.nodes, self.edges)
    }

    pub fn edge_type_counts(&self) -> BTreeMap<EdgeType, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.edges {
            *counts.entry(e.edge_type).or_insert(0) += 1;
        }
        counts
    }
}

/// The root document is the one document node not embedded through a
/// structure edge from another document or element. The parser's own
/// structure edge into the page does not count as embedding.
fn find_root_document(
    nodes: &[GraphNode],
    edges: &[GraphEdge],
    index: &HashMap<NodeId, usize>,
) -> Result<NodeId, GraphError> {
    let embedded: HashSet<NodeId> = edges
        .iter()
        .filter(|e| {
            e.edge_type == EdgeType::Structure
                && nodes[index[&e.source]].node_type != NodeType::Parser
        })
        .map(|e| e.target)
        .collect();
    let mut roots = nodes
        .iter()
        .filter(|n| n.node_type == NodeType::Document && !embedded.contains(&n.id));
    match (roots.next(), roots.next()) {
        (Some(root), None) => Ok(root.id),
        (None, _) => Err(GraphError::Schema {
            element: "graph".into(),
            key: "no root document".into(),
        }),
        (Some(_), Some(_)) => Err(GraphError::Schema {
            element: "graph".into(),
            key: "multiple root documents".into(),
        }),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// script --add event listener(click)--> element --event listener(click)--> script "alert(1)"
    pub fn event_listener_graph() -> ExecutionGraph {
        let parser = GraphNode::new(0, NodeType::Parser);
        let mut doc = GraphNode::new(1, NodeType::Document);
        doc.url = Some("https://example.com/".into());
        let mut script = GraphNode::new(2, NodeType::Script);
        script.script_type = Some(ScriptType::External);
        script.url = Some("https://example.com/app.js".into());
        let mut element = GraphNode::new(3, NodeType::HtmlElement);
        element.tag_name = Some("BUTTON".into());
        let mut handler = GraphNode::new(4, NodeType::Script);
        handler.script_type = Some(ScriptType::Unknown);
        handler
            .attributes
            .insert("source".into(), "alert(1)".into());

        let structure = GraphEdge::new(0, 0, 1, EdgeType::Structure, 0);
        let mut add = GraphEdge::new(1, 2, 3, EdgeType::AddEventListener, 1);
        add.key = Some("click".into());
        add.listener_id = Some(7);
        let mut fire = GraphEdge::new(2, 3, 4, EdgeType::EventListener, 2);
        fire.key = Some("click".into());
        fire.listener_id = Some(7);
        ExecutionGraph::new(
            vec![parser, doc, script, element, handler],
            vec![structure, add, fire],
        )
        .unwrap()
    }

    /// IMG -> https://foo.com/img.png, redirected to https://static.foo.com/img.png.
    pub fn redirect_graph() -> ExecutionGraph {
        let parser = GraphNode::new(0, NodeType::Parser);
        let mut doc = GraphNode::new(1, NodeType::Document);
        doc.url = Some("https://foo.com/".into());
        let mut img = GraphNode::new(2, NodeType::HtmlElement);
        img.tag_name = Some("IMG".into());
        let mut first = GraphNode::new(3, NodeType::Resource);
        first.url = Some("https://foo.com/img.png".into());
        let mut second = GraphNode::new(4, NodeType::Resource);
        second.url = Some("https://static.foo.com/img.png".into());

        let structure = GraphEdge::new(0, 0, 1, EdgeType::Structure, 0);
        let create = GraphEdge::new(1, 0, 2, EdgeType::CreateNode, 1);
        let mut start = GraphEdge::new(2, 2, 3, EdgeType::RequestStart, 2);
        start.request_id = Some(1);
        start.http_method = Some("GET".into());
        let mut redirect = GraphEdge::new(3, 3, 4, EdgeType::RequestRedirect, 3);
        redirect.request_id = Some(1);
        redirect.status = Some(301);
        let mut complete = GraphEdge::new(4, 4, 2, EdgeType::RequestComplete, 4);
        complete.request_id = Some(1);
        complete.status = Some(200);
        ExecutionGraph::new(
            vec![parser, doc, img, first, second],
            vec![structure, create, start, redirect, complete],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_type_names_round_trip() {
        for t in EdgeType::ALL {
            assert_eq!(t.as_str().parse::<EdgeType>().unwrap(), *t);
        }
        assert!("js_call".parse::<EdgeType>().is_err());
    }

    #[test]
    fn listener_graph_has_one_event_listener_edge() {
        let g = fixtures::event_listener_graph();
        let fired = g.edges_by_type(EdgeType::EventListener);
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].key.as_deref(), Some("click"));
    }

    #[test]
    fn edges_by_type_partition_all_edges() {
        let g = fixtures::redirect_graph();
        let total: usize = EdgeType::ALL
            .iter()
            .map(|t| g.edges_by_type(*t).len())
            .sum();
        assert_eq!(total, g.edges().len());
    }

    #[test]
    fn rejects_dangling_edge() {
        let doc = GraphNode::new(1, NodeType::Document);
        let e = GraphEdge::new(0, 1, 9, EdgeType::Structure, 0);
        assert!(matches!(
            ExecutionGraph::new(vec![doc], vec![e]),
            Err(GraphError::Schema { .. })
        ));
    }

    #[test]
    fn rejects_graph_without_document() {
        let parser = GraphNode::new(0, NodeType::Parser);
        assert!(ExecutionGraph::new(vec![parser], vec![]).is_err());
    }

    #[test]
    fn iframe_document_is_not_root() {
        let parser = GraphNode::new(0, NodeType::Parser);
        let doc = GraphNode::new(1, NodeType::Document);
        let mut iframe = GraphNode::new(2, NodeType::HtmlElement);
        iframe.tag_name = Some("IFRAME".into());
        let inner = GraphNode::new(3, NodeType::Document);
        let edges = vec![
            GraphEdge::new(0, 0, 1, EdgeType::Structure, 0),
            GraphEdge::new(1, 1, 2, EdgeType::Structure, 1),
            GraphEdge::new(2, 2, 3, EdgeType::Structure, 2),
        ];
        let g = ExecutionGraph::new(vec![parser, doc, iframe, inner], edges).unwrap();
        assert_eq!(g.root_document().id, 1);
    }
}
