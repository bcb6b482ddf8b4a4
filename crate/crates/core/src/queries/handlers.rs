use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::bundle::origin_of;
use crate::graph::{EdgeId, EdgeType, ExecutionGraph, NodeId, NodeType, ScriptType};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProvenanceError {
    #[error("event listener edge e{0} has no matching add event listener edge")]
    MissingAdder(EdgeId),
}

/// Who registered a listener.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "node")]
pub enum Adder {
    Parser,
    Script(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HandlerClass {
    /// Installed from a string, so it needs `unsafe-inline` under CSP.
    Inline,
    Programmatic,
}

impl std::fmt::Display for HandlerClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HandlerClass::Inline => "inline",
            HandlerClass::Programmatic => "programmatic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HandlerFinding {
    pub edge_id: EdgeId,
    pub element_node: NodeId,
    pub event_key: String,
    pub listener_script: NodeId,
    pub adder: Adder,
    pub classification: HandlerClass,
    pub frame_origin: String,
    pub cross_origin: bool,
}

/// Origin of the frame `node` lives in: the document sharing its frame id,
/// or the root document when it has none.
fn frame_origin(graph: &ExecutionGraph, node: NodeId) -> Option<String> {
    let frame = graph.node(node).and_then(|n| n.frame_id.as_deref());
    let doc = frame
        .and_then(|f| {
            graph
                .nodes()
                .iter()
                .find(|n| n.node_type == NodeType::Document && n.frame_id.as_deref() == Some(f))
        })
        .unwrap_or_else(|| graph.root_document());
    doc.url.as_deref().and_then(origin_of)
}

/// One finding per `event listener` edge, in event order.
///
/// A listener counts as programmatically added when the script that added
/// it is the listener itself, or when the listener script has a known type.
/// Everything else was compiled from a string.
pub fn detect_inline_event_handlers(
    graph: &ExecutionGraph,
    page_origin: &str,
) -> Result<Vec<HandlerFinding>, ProvenanceError> {
    let adds: Vec<_> = graph.edges_by_type(EdgeType::AddEventListener);
    let mut findings = Vec::new();
    for e in graph.edges_by_type(EdgeType::EventListener) {
        let add = e.listener_id.and_then(|id| {
            let mut matching = adds.iter().filter(|a| a.listener_id == Some(id));
            let before: Vec<_> = matching.clone().filter(|a| a.order < e.order).collect();
            before.last().copied().or_else(|| matching.next())
        });
        let Some(add) = add else {
            return Err(ProvenanceError::MissingAdder(e.id));
        };
        let adder_node = graph.node(add.source);
        let adder = match adder_node.map(|n| n.node_type) {
            Some(NodeType::Parser) => Adder::Parser,
            _ => Adder::Script(add.source),
        };
        let listener = graph.node(e.target);
        let known_type = listener
            .and_then(|n| n.script_type)
            .is_some_and(|t| t != ScriptType::Unknown);
        let classification = if adder == Adder::Script(e.target) || known_type {
            HandlerClass::Programmatic
        } else {
            HandlerClass::Inline
        };
        let origin = frame_origin(graph, e.source).unwrap_or_default();
        findings.push(HandlerFinding {
            edge_id: e.id,
            element_node: e.source,
            event_key: e.key.clone().unwrap_or_default(),
            listener_script: e.target,
            adder,
            classification,
            cross_origin: origin != page_origin,
            frame_origin: origin,
        });
    }
    Ok(findings)
}

/// Whether a page would need `unsafe-inline` for its own handlers.
/// Handlers in cross-origin frames fall under the frame's policy, not the
/// page's, and are ignored.
pub fn origin_is_affected(findings: &[HandlerFinding]) -> bool {
    findings
        .iter()
        .any(|f| f.classification == HandlerClass::Inline && !f.cross_origin)
}

/// Corpus tally of origins with same-origin inline handlers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HandlerCorpusSummary {
    pub origins: BTreeSet<String>,
    pub affected: BTreeSet<String>,
    pub inline_findings: u64,
    pub programmatic_findings: u64,
}

impl HandlerCorpusSummary {
    pub fn add(&mut self, origin: &str, findings: &[HandlerFinding]) {
        self.origins.insert(origin.to_string());
        if origin_is_affected(findings) {
            self.affected.insert(origin.to_string());
        }
        for f in findings {
            match f.classification {
                HandlerClass::Inline => self.inline_findings += 1,
                HandlerClass::Programmatic => self.programmatic_findings += 1,
            }
        }
    }

    pub fn merge(&mut self, other: HandlerCorpusSummary) {
        self.origins.extend(other.origins);
        self.affected.extend(other.affected);
        self.inline_findings += other.inline_findings;
        self.programmatic_findings += other.programmatic_findings;
    }
}
