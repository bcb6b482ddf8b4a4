use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{EdgeType, ExecutionGraph, GraphEdge, GraphError, GraphNode, NodeType, ScriptType};

const NODE_KEYS: [&str; 5] = ["node type", "tag name", "url", "script type", "frame id"];
const EDGE_KEYS: [(&str, &str); 11] = [
    ("edge type", "string"),
    ("order", "int"),
    ("timestamp", "long"),
    ("key", "string"),
    ("args", "string"),
    ("method name", "string"),
    ("request id", "int"),
    ("http method", "string"),
    ("status", "int"),
    ("resource type", "string"),
    ("listener id", "int"),
];

#[derive(Default)]
struct PendingElement {
    id: String,
    source: String,
    target: String,
    data: Vec<(String, String)>,
}

enum Scope {
    Node(PendingElement),
    Edge(PendingElement),
}

/// Parses a GraphML document in the execution-graph profile.
///
/// Keys outside the fixed profile are kept in each element's `attributes`.
pub fn parse_graphml(bytes: &[u8]) -> Result<ExecutionGraph, GraphError> {
    let mut reader = Reader::from_reader(bytes);
    let mut buf = Vec::new();
    let line_at = |pos: u64| {
        let pos = (pos as usize).min(bytes.len());
        bytes[..pos].iter().filter(|&&b| b == b'\n').count() + 1
    };
    let parse_err = |pos: u64, message: String| GraphError::Parse {
        line: line_at(pos),
        message,
    };

    // key id -> attribute name
    let mut keys: HashMap<String, String> = HashMap::new();
    let mut scope: Option<Scope> = None;
    let mut data_key: Option<String> = None;
    let mut data_text = String::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut saw_graphml = false;

    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| parse_err(reader.error_position(), e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let attrs = attributes(e).map_err(|m| parse_err(pos, m))?;
                match e.local_name().as_ref() {
                    b"graphml" => saw_graphml = true,
                    b"key" => {
                        let id = attrs.get("id").cloned().unwrap_or_default();
                        let name = attrs
                            .get("attr.name")
                            .cloned()
                            .unwrap_or_else(|| id.clone());
                        keys.insert(id, name);
                    }
                    b"node" => {
                        let el = PendingElement {
                            id: attrs.get("id").cloned().unwrap_or_default(),
                            ..Default::default()
                        };
                        if empty {
                            nodes.push(build_node(el)?);
                        } else {
                            scope = Some(Scope::Node(el));
                        }
                    }
                    b"edge" => {
                        let el = PendingElement {
                            id: attrs.get("id").cloned().unwrap_or_default(),
                            source: attrs.get("source").cloned().unwrap_or_default(),
                            target: attrs.get("target").cloned().unwrap_or_default(),
                            data: Vec::new(),
                        };
                        if empty {
                            edges.push(build_edge(el)?);
                        } else {
                            scope = Some(Scope::Edge(el));
                        }
                    }
                    b"data" if !empty => {
                        data_key = attrs.get("key").cloned();
                        data_text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if data_key.is_some() {
                    let text = t.unescape().map_err(|e| parse_err(pos, e.to_string()))?;
                    data_text.push_str(&text);
                }
            }
            Event::CData(t) => {
                if data_key.is_some() {
                    data_text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let name = keys.get(&key).cloned().unwrap_or(key);
                        match scope.as_mut() {
                            Some(Scope::Node(el)) | Some(Scope::Edge(el)) => {
                                el.data.push((name, std::mem::take(&mut data_text)))
                            }
                            None => {}
                        }
                    }
                }
                b"node" => {
                    if let Some(Scope::Node(el)) = scope.take() {
                        nodes.push(build_node(el)?);
                    }
                }
                b"edge" => {
                    if let Some(Scope::Edge(el)) = scope.take() {
                        edges.push(build_edge(el)?);
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_graphml {
        return Err(GraphError::Parse {
            line: 1,
            message: "no <graphml> root element".into(),
        });
    }
    ExecutionGraph::new(nodes, edges)
}

fn attributes(e: &BytesStart<'_>) -> Result<HashMap<String, String>, String> {
    let mut out = HashMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|e| e.to_string())?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr.unescape_value().map_err(|e| e.to_string())?;
        out.insert(key, value.into_owned());
    }
    Ok(out)
}

fn parse_id(raw: &str, prefix: char, element: &str) -> Result<u64, GraphError> {
    raw.strip_prefix(prefix)
        .unwrap_or(raw)
        .parse()
        .map_err(|_| GraphError::Schema {
            element: element.to_string(),
            key: "id".into(),
        })
}

fn parse_num<T: std::str::FromStr>(value: &str, element: &str, key: &str) -> Result<T, GraphError> {
    value.trim().parse().map_err(|_| GraphError::Schema {
        element: element.to_string(),
        key: key.to_string(),
    })
}

fn build_node(el: PendingElement) -> Result<GraphNode, GraphError> {
    let label = if el.id.is_empty() {
        "node".to_string()
    } else {
        el.id.clone()
    };
    let id = parse_id(&el.id, 'n', &label)?;
    let mut node_type = None;
    let mut node = GraphNode::new(id, NodeType::Extern);
    for (name, value) in el.data {
        match name.as_str() {
            "node type" => {
                node_type = Some(value.parse::<NodeType>().map_err(|_| GraphError::Schema {
                    element: label.clone(),
                    key: "node type".into(),
                })?)
            }
            "tag name" => node.tag_name = Some(value),
            "url" => node.url = Some(value),
            "script type" => {
                node.script_type =
                    Some(
                        value
                            .parse::<ScriptType>()
                            .map_err(|_| GraphError::Schema {
                                element: label.clone(),
                                key: "script type".into(),
                            })?,
                    )
            }
            "frame id" => node.frame_id = Some(value),
            _ => {
                node.attributes.insert(name, value);
            }
        }
    }
    node.node_type = node_type.ok_or_else(|| GraphError::Schema {
        element: label,
        key: "node type".into(),
    })?;
    Ok(node)
}

fn build_edge(el: PendingElement) -> Result<GraphEdge, GraphError> {
    let label = if el.id.is_empty() {
        "edge".to_string()
    } else {
        el.id.clone()
    };
    if el.id.is_empty() {
        return Err(GraphError::Schema {
            element: label,
            key: "id".into(),
        });
    }
    let id = parse_id(&el.id, 'e', &label)?;
    let source = parse_id(&el.source, 'n', &label)?;
    let target = parse_id(&el.target, 'n', &label)?;
    let mut edge = GraphEdge::new(id, source, target, EdgeType::Structure, id);
    let mut edge_type = None;
    for (name, value) in el.data {
        let value_ref = value.as_str();
        match name.as_str() {
            "edge type" => {
                edge_type = Some(
                    value_ref
                        .parse::<EdgeType>()
                        .map_err(|_| GraphError::Schema {
                            element: label.clone(),
                            key: "edge type".into(),
                        })?,
                )
            }
            "order" => edge.order = parse_num(value_ref, &label, "order")?,
            "timestamp" => edge.timestamp = parse_num(value_ref, &label, "timestamp")?,
            "key" => edge.key = Some(value),
            "args" => edge.args = Some(value),
            "method name" => edge.method_name = Some(value),
            "request id" => edge.request_id = Some(parse_num(value_ref, &label, "request id")?),
            "http method" => edge.http_method = Some(value),
            "status" => edge.status = Some(parse_num(value_ref, &label, "status")?),
            "resource type" => edge.resource_type = Some(value),
            "listener id" => edge.listener_id = Some(parse_num(value_ref, &label, "listener id")?),
            _ => {
                edge.attributes.insert(name, value);
            }
        }
    }
    edge.edge_type = edge_type.ok_or_else(|| GraphError::Schema {
        element: label.clone(),
        key: "edge type".into(),
    })?;
    if edge.edge_type == EdgeType::JsCall && edge.method_name.is_none() {
        return Err(GraphError::Schema {
            element: label,
            key: "method name".into(),
        });
    }
    Ok(edge)
}

/// Serializes a graph to GraphML. Output is deterministic: keys in a fixed
/// order followed by extra keys sorted by name, then nodes and edges by id.
pub fn serialize_graphml(graph: &ExecutionGraph) -> Vec<u8> {
    let extra_node_keys: BTreeSet<&str> = graph
        .nodes()
        .iter()
        .flat_map(|n| n.attributes.keys().map(String::as_str))
        .collect();
    let extra_edge_keys: BTreeSet<&str> = graph
        .edges()
        .iter()
        .flat_map(|e| e.attributes.keys().map(String::as_str))
        .collect();

    let mut out = String::with_capacity(256 + graph.edges().len() * 160);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");

    let mut node_key_ids: BTreeMap<&str, String> = BTreeMap::new();
    for (i, name) in NODE_KEYS.iter().enumerate() {
        let id = format!("n{i}");
        key_decl(&mut out, &id, "node", name, "string");
        node_key_ids.insert(name, id);
    }
    let mut edge_key_ids: BTreeMap<&str, String> = BTreeMap::new();
    for (i, (name, ty)) in EDGE_KEYS.iter().enumerate() {
        let id = format!("e{i}");
        key_decl(&mut out, &id, "edge", name, ty);
        edge_key_ids.insert(name, id);
    }
    for (i, name) in extra_node_keys.iter().enumerate() {
        let id = format!("xn{i}");
        key_decl(&mut out, &id, "node", name, "string");
        node_key_ids.insert(name, id);
    }
    for (i, name) in extra_edge_keys.iter().enumerate() {
        let id = format!("xe{i}");
        key_decl(&mut out, &id, "edge", name, "string");
        edge_key_ids.insert(name, id);
    }

    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for node in graph.nodes() {
        let _ = writeln!(out, "    <node id=\"n{}\">", node.id);
        data(
            &mut out,
            &node_key_ids["node type"],
            node.node_type.as_str(),
        );
        if let Some(v) = &node.tag_name {
            data(&mut out, &node_key_ids["tag name"], v);
        }
        if let Some(v) = &node.url {
            data(&mut out, &node_key_ids["url"], v);
        }
        if let Some(v) = node.script_type {
            data(&mut out, &node_key_ids["script type"], v.as_str());
        }
        if let Some(v) = &node.frame_id {
            data(&mut out, &node_key_ids["frame id"], v);
        }
        for (name, v) in &node.attributes {
            data(&mut out, &node_key_ids[name.as_str()], v);
        }
        out.push_str("    </node>\n");
    }

    let mut edges: Vec<&GraphEdge> = graph.edges().iter().collect();
    edges.sort_by_key(|e| e.id);
    for edge in edges {
        let _ = writeln!(
            out,
            "    <edge id=\"e{}\" source=\"n{}\" target=\"n{}\">",
            edge.id, edge.source, edge.target
        );
        let k = |name: &str| edge_key_ids[name].as_str();
        data(&mut out, k("edge type"), edge.edge_type.as_str());
        data(&mut out, k("order"), &edge.order.to_string());
        data(&mut out, k("timestamp"), &edge.timestamp.to_string());
        let optional: [(&str, Option<String>); 8] = [
            ("key", edge.key.clone()),
            ("args", edge.args.clone()),
            ("method name", edge.method_name.clone()),
            ("request id", edge.request_id.map(|v| v.to_string())),
            ("http method", edge.http_method.clone()),
            ("status", edge.status.map(|v| v.to_string())),
            ("resource type", edge.resource_type.clone()),
            ("listener id", edge.listener_id.map(|v| v.to_string())),
        ];
        for (name, value) in optional {
            if let Some(v) = value {
                data(&mut out, k(name), &v);
            }
        }
        for (name, v) in &edge.attributes {
            data(&mut out, k(name), v);
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out.into_bytes()
}

fn key_decl(out: &mut String, id: &str, domain: &str, name: &str, ty: &str) {
    let _ = writeln!(
        out,
        "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{}\" attr.type=\"{ty}\"/>",
        escape(name)
    );
}

fn data(out: &mut String, key: &str, value: &str) {
    let _ = writeln!(out, "      <data key=\"{key}\">{}</data>", escape(value));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    const MINIMAL: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="node" attr.name="node type" attr.type="string"/>
  <key id="d1" for="edge" attr.name="edge type" attr.type="string"/>
  <graph edgedefault="directed">
    <node id="n0"><data key="d0">parser</data></node>
    <node id="n1"><data key="d0">document</data></node>
    <edge id="e0" source="n0" target="n1"><data key="d1">structure</data></edge>
  </graph>
</graphml>"#;

    #[test]
    fn minimal_graph() {
        let g = parse_graphml(MINIMAL.as_bytes()).unwrap();
        assert_eq!(g.nodes().len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.root_document().id, 1);
        let again = parse_graphml(&serialize_graphml(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn event_listener_graph_parses() {
        let xml = r#"<graphml>
  <key id="t" for="node" attr.name="node type"/>
  <key id="s" for="node" attr.name="script type"/>
  <key id="g" for="node" attr.name="tag name"/>
  <key id="et" for="edge" attr.name="edge type"/>
  <key id="k" for="edge" attr.name="key"/>
  <key id="l" for="edge" attr.name="listener id" attr.type="int"/>
  <key id="src" for="node" attr.name="source"/>
  <graph edgedefault="directed">
    <node id="n1"><data key="t">document</data></node>
    <node id="n2"><data key="t">script</data><data key="s">external</data></node>
    <node id="n3"><data key="t">html element</data><data key="g">BUTTON</data></node>
    <node id="n4"><data key="t">script</data><data key="s">unknown</data><data key="src">alert(1)</data></node>
    <edge id="e1" source="n2" target="n3"><data key="et">add event listener</data><data key="k">click</data><data key="l">3</data></edge>
    <edge id="e2" source="n3" target="n4"><data key="et">event listener</data><data key="k">click</data><data key="l">3</data></edge>
  </graph>
</graphml>"#;
        let g = parse_graphml(xml.as_bytes()).unwrap();
        assert_eq!(g.nodes().len(), 3 + 1);
        assert_eq!(g.edges().len(), 2);
        let ids: Vec<_> = g.edges().iter().map(|e| e.listener_id).collect();
        assert_eq!(ids, vec![Some(3), Some(3)]);
        assert!(g.edges().iter().all(|e| e.key.as_deref() == Some("click")));
        assert_eq!(g.node(4).unwrap().attributes["source"], "alert(1)");
    }

    #[test]
    fn js_call_without_method_name_is_schema_error() {
        let xml = r#"<graphml>
  <key id="t" for="node" attr.name="node type"/>
  <key id="et" for="edge" attr.name="edge type"/>
  <graph>
    <node id="n1"><data key="t">document</data></node>
    <node id="n2"><data key="t">script</data></node>
    <edge id="e9" source="n2" target="n1"><data key="et">js call</data></edge>
  </graph>
</graphml>"#;
        assert_eq!(
            parse_graphml(xml.as_bytes()).unwrap_err(),
            GraphError::Schema {
                element: "e9".into(),
                key: "method name".into()
            }
        );
    }

    #[test]
    fn edge_without_type_is_schema_error() {
        let xml = MINIMAL.replace("<data key=\"d1\">structure</data>", "");
        assert!(matches!(
            parse_graphml(xml.as_bytes()),
            Err(GraphError::Schema { key, .. }) if key == "edge type"
        ));
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = "<graphml>\n<graph>\n<node id=\"n1\"></edge>\n</graph></graphml>";
        match parse_graphml(xml.as_bytes()) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_attributes_and_escaping_survive() {
        let (mut nodes, mut edges) = fixtures::event_listener_graph().into_parts();
        nodes[2]
            .attributes
            .insert("weird <name>".into(), "a & \"b\"".into());
        edges[0]
            .attributes
            .insert("extra".into(), "  spaced  ".into());
        edges[1].args = Some("[\"<script>\", 1]".into());
        let g = ExecutionGraph::new(nodes, edges).unwrap();
        let xml = serialize_graphml(&g);
        let back = parse_graphml(&xml).unwrap();
        assert_eq!(back, g);
        assert_eq!(serialize_graphml(&back), xml);
    }
}
