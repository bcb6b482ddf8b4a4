//! Tooling for `.web` page-execution archives.
//!
//! A bundle pairs what a page fetched (a HAR log) with how it behaved (an
//! execution graph in GraphML) and what it looked like (a screenshot). The
//! modules here read and write those members, validate them, generate
//! synthetic bundles with known ground truth, and run the standard analyses:
//! API appearance counts, inline event-handler provenance, request
//! extraction and attribution, HAR page-context filtering, and third-party
//! prevalence with filter-list tracking classification.

pub mod bundle;
pub mod cli;
pub mod graph;
pub mod har;
pub mod harfilter;
pub mod queries;
pub mod report;
pub mod synth;
pub mod trackers;

pub use bundle::{load_bundle, pack_bundle, validate_bundle, Manifest, WebBundle};
pub use graph::{
    parse_graphml, serialize_graphml, EdgeType, ExecutionGraph, GraphEdge, GraphNode, NodeType,
};
pub use har::{parse_har, write_har, HarArchive, HarEntry};
