use serde::Serialize;
use url::Url;

use super::{origin_of, WebBundle};
use crate::report::{Finding, Severity};

/// Findings ordered by member, then code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }
}

/// Checks every bundle, graph, and HAR invariant. Problems are entries in
/// the report, never failures; the result depends only on the bundle.
pub fn validate_bundle(bundle: &WebBundle) -> ValidationReport {
    let mut findings = manifest_findings(bundle);
    findings.extend(bundle.graph.issues());
    findings.extend(bundle.har.issues());
    findings.sort();
    ValidationReport { findings }
}

fn manifest_findings(bundle: &WebBundle) -> Vec<Finding> {
    const MEMBER: &str = "manifest";
    let m = &bundle.manifest;
    let mut out = Vec::new();
    for (field, value) in [("initial_url", &m.initial_url), ("final_url", &m.final_url)] {
        if Url::parse(value).is_err() {
            out.push(Finding::error(
                MEMBER,
                "MANIFEST_BAD_URL",
                format!("{field} `{value}` is not an absolute URL"),
            ));
        }
    }
    if !m.captured_at_is_valid() {
        out.push(Finding::error(
            MEMBER,
            "MANIFEST_BAD_TIMESTAMP",
            format!("captured_at `{}` is not RFC 3339", m.captured_at),
        ));
    }
    let final_origin = origin_of(&m.final_url);
    if let Some(final_origin) = &final_origin {
        if &m.page_origin != final_origin {
            out.push(Finding::error(
                MEMBER,
                "MANIFEST_PAGE_ORIGIN",
                format!(
                    "page_origin `{}` is not the origin of final_url",
                    m.page_origin
                ),
            ));
        }
    }
    let root_origin = bundle
        .graph
        .root_document()
        .url
        .as_deref()
        .and_then(origin_of);
    if final_origin.is_some() && root_origin != final_origin {
        out.push(Finding::error(
            MEMBER,
            "MANIFEST_ROOT_ORIGIN",
            format!(
                "final_url origin differs from root document origin {:?}",
                root_origin
            ),
        ));
    }
    out
}
