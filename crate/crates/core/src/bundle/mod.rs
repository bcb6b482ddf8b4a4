//! The `.web` container: a zip (or a plain directory) holding a manifest,
//! the HAR log, the execution graph, and a screenshot under fixed names.

mod container;
mod validate;

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::graph::{parse_graphml, serialize_graphml, EdgeType, ExecutionGraph};
use crate::har::{parse_har, write_har, HarArchive};

pub use container::{
    pack_bundle, read_members, unpack_bundle, write_bundle, write_bundle_dir, BundleSummary,
    MemberSummary,
};
pub use validate::{validate_bundle, ValidationReport};

pub const MANIFEST_MEMBER: &str = "manifest.json";
pub const HAR_MEMBER: &str = "page.har";
pub const GRAPH_MEMBER: &str = "page.graphml";
pub const SCREENSHOT_MEMBER: &str = "page.png";
pub const MEMBER_NAMES: [&str; 4] = [MANIFEST_MEMBER, HAR_MEMBER, GRAPH_MEMBER, SCREENSHOT_MEMBER];

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle member `{0}` is missing")]
    MissingMember(String),
    #[error("bundle member `{name}` does not parse: {cause}")]
    MemberParse { name: String, cause: String },
    #[error("bundle invariant violated: {0}")]
    InvariantViolation(String),
    #[error("bad container: {0}")]
    Container(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub initial_url: String,
    pub final_url: String,
    /// RFC 3339, UTC.
    pub captured_at: String,
    pub tool_version: String,
    pub user_agent: String,
    /// Serialized origin (scheme, host, and non-default port) of the page.
    pub page_origin: String,
}

impl Manifest {
    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    pub fn captured_at_is_valid(&self) -> bool {
        DateTime::parse_from_rfc3339(&self.captured_at).is_ok()
    }
}

/// ASCII serialization of a URL's origin, or `None` for unparsable or
/// opaque-origin URLs.
pub fn origin_of(url: &str) -> Option<String> {
    let parsed = Url::parse(url).ok()?;
    let origin = parsed.origin();
    origin.is_tuple().then(|| origin.ascii_serialization())
}

/// Raw member bytes, decompressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Members {
    pub manifest: Vec<u8>,
    pub har: Vec<u8>,
    pub graph: Vec<u8>,
    pub screenshot: Option<Vec<u8>>,
}

impl Members {
    pub fn parse(&self) -> Result<WebBundle, BundleError> {
        let parse_err = |name: &str, cause: String| BundleError::MemberParse {
            name: name.to_string(),
            cause,
        };
        let manifest = Manifest::from_json(&self.manifest)
            .map_err(|e| parse_err(MANIFEST_MEMBER, e.to_string()))?;
        let har = parse_har(&self.har).map_err(|e| parse_err(HAR_MEMBER, e.to_string()))?;
        let graph =
            parse_graphml(&self.graph).map_err(|e| parse_err(GRAPH_MEMBER, e.to_string()))?;
        Ok(WebBundle {
            manifest,
            har,
            graph,
            screenshot: self.screenshot.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WebBundle {
    pub manifest: Manifest,
    pub har: HarArchive,
    pub graph: ExecutionGraph,
    pub screenshot: Option<Vec<u8>>,
}

impl WebBundle {
    pub fn to_members(&self) -> Members {
        Members {
            manifest: self.manifest.to_json(),
            har: write_har(&self.har),
            graph: serialize_graphml(&self.graph),
            screenshot: self.screenshot.clone(),
        }
    }

    /// The cross-member invariants `load_bundle` enforces: the manifest's
    /// final URL shares the root document's origin, and every URL a request
    /// edge points at is absolute.
    pub fn check_invariants(&self) -> Result<(), BundleError> {
        let final_origin = origin_of(&self.manifest.final_url).ok_or_else(|| {
            BundleError::InvariantViolation(format!(
                "manifest final_url `{}` has no origin",
                self.manifest.final_url
            ))
        })?;
        let root = self.graph.root_document();
        let root_origin = root.url.as_deref().and_then(origin_of);
        if root_origin.as_deref() != Some(final_origin.as_str()) {
            return Err(BundleError::InvariantViolation(format!(
                "manifest final_url origin `{final_origin}` differs from root document origin `{}`",
                root_origin.unwrap_or_else(|| "none".into())
            )));
        }
        for e in self.graph.edges() {
            if !matches!(
                e.edge_type,
                EdgeType::RequestStart | EdgeType::RequestRedirect
            ) {
                continue;
            }
            let url = self.graph.node(e.target).and_then(|n| n.url.as_deref());
            if !url.is_some_and(|u| Url::parse(u).is_ok()) {
                return Err(BundleError::InvariantViolation(format!(
                    "request edge e{} targets a non-absolute url {:?}",
                    e.id, url
                )));
            }
        }
        Ok(())
    }
}

/// Loads a packed `.web` file or an unpacked bundle directory.
pub fn load_bundle(path: impl AsRef<std::path::Path>) -> Result<WebBundle, BundleError> {
    let bundle = read_members(path.as_ref())?.parse()?;
    bundle.check_invariants()?;
    Ok(bundle)
}
