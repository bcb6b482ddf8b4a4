//! The HAR member: a HAR 1.2 subset carrying URLs, methods, headers,
//! statuses, and start times. Fields outside the model are kept as opaque
//! JSON and written back unchanged.

use chrono::{DateTime, FixedOffset};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::report::Finding;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarError {
    #[error("malformed HAR JSON: {0}")]
    Parse(String),
    #[error("HAR schema error at entry {index:?}: {field}")]
    Schema { index: Option<usize>, field: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub name: String,
    pub value: String,
}

impl Header {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Header {
            name: name.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Request,
    Response,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarPage {
    pub id: String,
    pub started_at: String,
    pub title: String,
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarEntry {
    /// RFC 3339 start time as recorded.
    pub started_at: String,
    pub method: String,
    pub url: String,
    pub request_headers: Vec<Header>,
    /// 0 when no response was recorded.
    pub response_status: u16,
    pub response_headers: Vec<Header>,
    pub response_body_size: i64,
    pub pageref: Option<String>,
    /// Everything in the entry object that the fields above do not cover.
    pub extra: Map<String, Value>,
}

impl HarEntry {
    pub fn new(
        started_at: impl Into<String>,
        method: impl Into<String>,
        url: impl Into<String>,
    ) -> Self {
        HarEntry {
            started_at: started_at.into(),
            method: method.into(),
            url: url.into(),
            request_headers: Vec::new(),
            response_status: 0,
            response_headers: Vec::new(),
            response_body_size: -1,
            pageref: None,
            extra: Map::new(),
        }
    }

    pub fn started_at(&self) -> Option<DateTime<FixedOffset>> {
        DateTime::parse_from_rfc3339(&self.started_at).ok()
    }

    /// Case-insensitive header lookup; the first occurrence wins.
    pub fn header(&self, side: Side, name: &str) -> Option<&str> {
        let headers = match side {
            Side::Request => &self.request_headers,
            Side::Response => &self.response_headers,
        };
        headers
            .iter()
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .map(|h| h.value.as_str())
    }
}

pub fn header<'a>(entry: &'a HarEntry, side: Side, name: &str) -> Option<&'a str> {
    entry.header(side, name)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HarArchive {
    pub pages: Vec<HarPage>,
    /// Entries ordered by start time; ties keep file order.
    pub entries: Vec<HarEntry>,
    /// Log-level fields other than `version`, `pages`, and `entries`.
    pub extra: Map<String, Value>,
}

impl HarArchive {
    /// An archive with the given entries and this crate as creator.
    pub fn new(entries: Vec<HarEntry>) -> Self {
        let mut extra = Map::new();
        extra.insert("creator".into(), default_creator());
        let mut archive = HarArchive {
            entries,
            extra,
            ..Default::default()
        };
        archive.sort_entries();
        archive
    }

    /// Stable sort by parsed start time. Entries whose time does not parse
    /// sort first, in file order.
    pub fn sort_entries(&mut self) {
        self.entries.sort_by_cached_key(|e| e.started_at());
    }

    pub fn issues(&self) -> Vec<Finding> {
        const MEMBER: &str = "har";
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.started_at().is_none() {
                out.push(Finding::error(
                    MEMBER,
                    "HAR_BAD_TIMESTAMP",
                    format!(
                        "entry {i} startedDateTime `{}` is not RFC 3339",
                        e.started_at
                    ),
                ));
            }
            if url::Url::parse(&e.url).is_err() {
                out.push(Finding::error(
                    MEMBER,
                    "HAR_RELATIVE_URL",
                    format!("entry {i} url `{}` is not absolute", e.url),
                ));
            }
            if e.response_status > 599 {
                out.push(Finding::error(
                    MEMBER,
                    "HAR_BAD_STATUS",
                    format!("entry {i} status {} outside 0..=599", e.response_status),
                ));
            }
            if let Some(p) = &e.pageref {
                if !self.pages.iter().any(|page| &page.id == p) {
                    out.push(Finding::error(
                        MEMBER,
                        "HAR_UNKNOWN_PAGEREF",
                        format!("entry {i} references undeclared page `{p}`"),
                    ));
                }
            }
        }
        for page in &self.pages {
            if DateTime::parse_from_rfc3339(&page.started_at).is_err() {
                out.push(Finding::error(
                    MEMBER,
                    "HAR_BAD_TIMESTAMP",
                    format!("page `{}` startedDateTime is not RFC 3339", page.id),
                ));
            }
        }
        out.sort();
        out
    }
}

fn schema(index: Option<usize>, field: &str) -> HarError {
    HarError::Schema {
        index,
        field: field.to_string(),
    }
}

fn take_str(obj: &mut Map<String, Value>, key: &str) -> Option<String> {
    match obj.remove(key) {
        Some(Value::String(s)) => Some(s),
        Some(other) => {
            obj.insert(key.to_string(), other);
            None
        }
        None => None,
    }
}

fn take_headers(
    obj: &mut Map<String, Value>,
    index: usize,
    side: &str,
) -> Result<Vec<Header>, HarError> {
    let Some(value) = obj.remove("headers") else {
        return Ok(Vec::new());
    };
    let Value::Array(items) = value else {
        return Err(schema(Some(index), &format!("{side}.headers")));
    };
    items
        .into_iter()
        .map(|h| {
            let name = h.get("name").and_then(Value::as_str);
            let value = h.get("value").and_then(Value::as_str);
            match (name, value) {
                (Some(n), Some(v)) => Ok(Header::new(n, v)),
                _ => Err(schema(Some(index), &format!("{side}.headers"))),
            }
        })
        .collect()
}

/// Removes `obj[key]` and hands it to `f` as a map; puts the remainder back
/// unless it ends up empty.
fn with_child<T>(
    obj: &mut Map<String, Value>,
    key: &str,
    f: impl FnOnce(&mut Map<String, Value>) -> Result<T, HarError>,
) -> Result<T, HarError> {
    let mut child = match obj.remove(key) {
        Some(Value::Object(m)) => m,
        Some(_) => return Err(schema(None, key)),
        None => Map::new(),
    };
    let out = f(&mut child)?;
    if !child.is_empty() {
        obj.insert(key.to_string(), Value::Object(child));
    }
    Ok(out)
}

fn parse_entry(index: usize, value: Value) -> Result<HarEntry, HarError> {
    let Value::Object(mut obj) = value else {
        return Err(schema(Some(index), "entry"));
    };
    let started_at = take_str(&mut obj, "startedDateTime").unwrap_or_default();
    let pageref = take_str(&mut obj, "pageref");
    let (method, url, request_headers) = with_child(&mut obj, "request", |req| {
        let url = take_str(req, "url").ok_or_else(|| schema(Some(index), "request.url"))?;
        let method = take_str(req, "method").unwrap_or_else(|| "GET".to_string());
        let headers = take_headers(req, index, "request")?;
        Ok((method, url, headers))
    })
    .map_err(|e| match e {
        HarError::Schema { index: None, field } => schema(Some(index), &field),
        other => other,
    })?;
    let (response_status, response_headers, response_body_size) =
        with_child(&mut obj, "response", |resp| {
            let status = match resp.remove("status") {
                None | Some(Value::Null) => 0,
                Some(v) => v
                    .as_u64()
                    .and_then(|s| u16::try_from(s).ok())
                    .ok_or_else(|| schema(Some(index), "response.status"))?,
            };
            let headers = take_headers(resp, index, "response")?;
            let size = match resp.remove("bodySize") {
                None | Some(Value::Null) => -1,
                Some(v) => v
                    .as_i64()
                    .ok_or_else(|| schema(Some(index), "response.bodySize"))?,
            };
            Ok((status, headers, size))
        })
        .map_err(|e| match e {
            HarError::Schema { index: None, field } => schema(Some(index), &field),
            other => other,
        })?;
    Ok(HarEntry {
        started_at,
        method,
        url,
        request_headers,
        response_status,
        response_headers,
        response_body_size,
        pageref,
        extra: obj,
    })
}

/// Parses a HAR log (versions 1.1 and 1.2).
pub fn parse_har(bytes: &[u8]) -> Result<HarArchive, HarError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| HarError::Parse(e.to_string()))?;
    let Value::Object(mut root) = root else {
        return Err(schema(None, "log"));
    };
    let Some(Value::Object(mut log)) = root.remove("log") else {
        return Err(schema(None, "log"));
    };
    match log.remove("version") {
        None => {}
        Some(Value::String(v)) if v == "1.1" || v == "1.2" => {}
        Some(_) => return Err(schema(None, "log.version")),
    }
    let Some(Value::Array(raw_entries)) = log.remove("entries") else {
        return Err(schema(None, "log.entries"));
    };
    let pages = match log.remove("pages") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|p| {
                let Value::Object(mut p) = p else {
                    return Err(schema(None, "log.pages"));
                };
                Ok(HarPage {
                    id: take_str(&mut p, "id").ok_or_else(|| schema(None, "log.pages.id"))?,
                    started_at: take_str(&mut p, "startedDateTime").unwrap_or_default(),
                    title: take_str(&mut p, "title").unwrap_or_default(),
                    extra: p,
                })
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(schema(None, "log.pages")),
    };
    let entries = raw_entries
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_entry(i, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut archive = HarArchive {
        pages,
        entries,
        extra: log,
    };
    archive.sort_entries();
    Ok(archive)
}

pub fn default_creator() -> Value {
    json!({ "name": "webbundle", "version": env!("CARGO_PKG_VERSION") })
}

fn headers_json(headers: &[Header]) -> Value {
    Value::Array(
        headers
            .iter()
            .map(|h| json!({ "name": h.name, "value": h.value }))
            .collect(),
    )
}

fn child(obj: &mut Map<String, Value>, key: &str) -> Map<String, Value> {
    match obj.remove(key) {
        Some(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

/// Writes the archive as HAR 1.2 JSON. Keys are emitted in sorted order, so
/// the output is deterministic.
pub fn write_har(archive: &HarArchive) -> Vec<u8> {
    let pages: Vec<Value> = archive
        .pages
        .iter()
        .map(|p| {
            let mut obj = p.extra.clone();
            obj.insert("id".into(), p.id.clone().into());
            obj.insert("startedDateTime".into(), p.started_at.clone().into());
            obj.insert("title".into(), p.title.clone().into());
            Value::Object(obj)
        })
        .collect();
    let entries: Vec<Value> = archive
        .entries
        .iter()
        .map(|e| {
            let mut obj = e.extra.clone();
            let mut req = child(&mut obj, "request");
            req.insert("method".into(), e.method.clone().into());
            req.insert("url".into(), e.url.clone().into());
            req.insert("headers".into(), headers_json(&e.request_headers));
            let mut resp = child(&mut obj, "response");
            resp.insert("status".into(), e.response_status.into());
            resp.insert("headers".into(), headers_json(&e.response_headers));
            resp.insert("bodySize".into(), e.response_body_size.into());
            obj.insert("startedDateTime".into(), e.started_at.clone().into());
            obj.insert("request".into(), Value::Object(req));
            obj.insert("response".into(), Value::Object(resp));
            if let Some(p) = &e.pageref {
                obj.insert("pageref".into(), p.clone().into());
            }
            Value::Object(obj)
        })
        .collect();
    let mut log = archive.extra.clone();
    log.insert("version".into(), "1.2".into());
    log.entry("creator").or_insert_with(default_creator);
    log.insert("pages".into(), Value::Array(pages));
    log.insert("entries".into(), Value::Array(entries));
    let mut bytes =
        serde_json::to_vec_pretty(&json!({ "log": log })).expect("HAR values serialize");
    bytes.push(b'\n');
    bytes
}
