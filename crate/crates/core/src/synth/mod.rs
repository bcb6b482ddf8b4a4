//! Deterministic scenario generator. A scenario is a causally ordered list
//! of page events; turning it into a bundle also yields a ledger of what
//! every query should report, computed from the events alone.

mod build;
mod generate;
mod hosts;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{
    scenario_to_bundle, HandlerLabel, HarLabel, Hop, RequestLabel, SynthBundle, SynthLedger,
};
pub use generate::{generate_scenario, inject_races};
pub use hosts::{KnownHost, THIRD_PARTIES};

/// Fixed 1x1 grayscale PNG used as the screenshot member.
pub const PLACEHOLDER_PNG: [u8; 68] = [
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52,
    0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x04, 0x00, 0x00, 0x00, 0xb5, 0x1c, 0x0c,
    0x02, 0x00, 0x00, 0x00, 0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0xda, 0x63, 0x64, 0x60, 0x00, 0x00,
    0x00, 0x06, 0x00, 0x02, 0x30, 0x81, 0xd0, 0x2f, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44,
    0xae, 0x42, 0x60, 0x82,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Size {
    Small,
    Medium,
    Large,
    /// Roughly this many events.
    Custom(usize),
}

impl Size {
    pub fn target_events(self) -> usize {
        match self {
            Size::Small => 24,
            Size::Medium => 80,
            Size::Large => 240,
            Size::Custom(n) => n.max(1),
        }
    }

    /// Third-party script hosts loaded up front.
    pub fn forced_third_parties(self) -> usize {
        match self {
            Size::Small => 1,
            Size::Medium => 2,
            Size::Large | Size::Custom(_) => 3,
        }
    }

    fn code(self) -> u64 {
        match self {
            Size::Small => 1,
            Size::Medium => 2,
            Size::Large => 3,
            Size::Custom(n) => 4 ^ ((n as u64) << 8),
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Size::Small => f.write_str("small"),
            Size::Medium => f.write_str("medium"),
            Size::Large => f.write_str("large"),
            Size::Custom(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(Size::Small),
            "medium" => Ok(Size::Medium),
            "large" => Ok(Size::Large),
            other => other.parse::<usize>().map(Size::Custom).map_err(|_| {
                format!("unknown size `{s}` (small, medium, large, or an event count)")
            }),
        }
    }
}

impl Serialize for Size {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Size {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Preflight,
    CspReport,
    WebSocket,
    BrowserInternal,
    ServiceWorker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redirect {
    pub status: u16,
    pub url: String,
}

/// Handles (`element`, `script`, `document`) name scenario entities; an
/// event that introduces one must use a fresh handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioEvent {
    ParserCreatesElement {
        element: u32,
        tag: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attrs: BTreeMap<String, String>,
        /// Embedded document the element lives in; the main frame if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frame: Option<u32>,
    },
    /// A SCRIPT element runs a script, fetching it first when it has a URL.
    ScriptLoaded {
        script: u32,
        element: u32,
        url: Option<String>,
    },
    ScriptCallsApi {
        script: u32,
        api: String,
        times: u32,
    },
    /// With `inline`, the handler is compiled from a string into a separate
    /// script node; otherwise the script registers one of its own functions.
    ScriptAddsListener {
        script: u32,
        element: u32,
        key: String,
        inline: bool,
    },
    /// An HTML `on*` attribute.
    ParserAddsListener { element: u32, key: String },
    ScriptCreatesElement {
        script: u32,
        element: u32,
        tag: String,
    },
    ElementRequests {
        element: u32,
        url: String,
        #[serde(default)]
        redirects: Vec<Redirect>,
        status: u16,
    },
    FetchRequest {
        script: u32,
        url: String,
        method: String,
        api: String,
    },
    /// An IFRAME element loads a document.
    DocumentEmbedded {
        element: u32,
        document: u32,
        url: String,
    },
    /// A request the proxy failed to record: graph only.
    InjectRace { element: u32, url: String },
    /// A navigation redirect before the page document: HAR only.
    InitialRedirect { url: String, status: u16 },
    /// Traffic that is not page context: HAR only.
    HarNoise { noise: NoiseKind, url: String },
}

impl ScenarioEvent {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioEvent::ParserCreatesElement { .. } => "parser_creates_element",
            ScenarioEvent::ScriptLoaded { .. } => "script_loaded",
            ScenarioEvent::ScriptCallsApi { .. } => "script_calls_api",
            ScenarioEvent::ScriptAddsListener { .. } => "script_adds_listener",
            ScenarioEvent::ParserAddsListener { .. } => "parser_adds_listener",
            ScenarioEvent::ScriptCreatesElement { .. } => "script_creates_element",
            ScenarioEvent::ElementRequests { .. } => "element_requests",
            ScenarioEvent::FetchRequest { .. } => "fetch_request",
            ScenarioEvent::DocumentEmbedded { .. } => "document_embedded",
            ScenarioEvent::InjectRace { .. } => "inject_race",
            ScenarioEvent::InitialRedirect { .. } => "initial_redirect",
            ScenarioEvent::HarNoise { .. } => "har_noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub size: Size,
    /// Registrable domain of the page.
    pub site: String,
    pub page_origin: String,
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn final_url(&self) -> String {
        format!("{}/", self.page_origin)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("scenario serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn count(&self, label: &str) -> usize {
        self.events.iter().filter(|e| e.label() == label).count()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("scenario event {index}: {message}")]
pub struct ScenarioError {
    pub index: usize,
    pub message: String,
}

/// Stream seed for one `(seed, size)` pair.
fn stream_seed(seed: u64, size: Size) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ size.code()
}
