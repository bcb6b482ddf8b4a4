use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::graph::{EdgeType, ExecutionGraph};

pub const CSS_OM_APIS: &str = include_str!("../../data/apis/css_om.txt");
pub const CHANNEL_MESSAGING_APIS: &str = include_str!("../../data/apis/channel_messaging.txt");

/// A set of API-name prefixes. An API matches when its `Interface.member`
/// name starts with any prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiFilter {
    prefixes: Vec<String>,
}

impl ApiFilter {
    /// One prefix per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let prefixes = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        ApiFilter { prefixes }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn from_prefixes<S: Into<String>>(prefixes: impl IntoIterator<Item = S>) -> Self {
        ApiFilter {
            prefixes: prefixes.into_iter().map(Into::into).collect(),
        }
    }

    /// CSS Object Model and HTML Channel Messaging, the two standards of the
    /// archive-fidelity experiment.
    pub fn bundled() -> Self {
        let mut f = Self::parse(CSS_OM_APIS);
        f.prefixes
            .extend(Self::parse(CHANNEL_MESSAGING_APIS).prefixes);
        f
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn matches(&self, api: &str) -> bool {
        self.prefixes.iter().any(|p| api.starts_with(p.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Appearance {
    pub origin: String,
    pub api: String,
    pub count: u64,
}

/// Appearances keyed by `(origin, api)`.
pub type AppearanceSet = BTreeMap<(String, String), u64>;

pub fn to_set(appearances: impl IntoIterator<Item = Appearance>) -> AppearanceSet {
    let mut set = AppearanceSet::new();
    for a in appearances {
        *set.entry((a.origin, a.api)).or_insert(0) += a.count;
    }
    set
}

pub fn from_set(set: &AppearanceSet) -> Vec<Appearance> {
    set.iter()
        .map(|((origin, api), &count)| Appearance {
            origin: origin.clone(),
            api: api.clone(),
            count,
        })
        .collect()
}

/// One appearance per distinct `js call` method name, sorted by API name.
pub fn count_api_appearances(
    graph: &ExecutionGraph,
    origin: &str,
    filter: Option<&ApiFilter>,
) -> Vec<Appearance> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for e in graph.edges() {
        if e.edge_type != EdgeType::JsCall {
            continue;
        }
        let Some(api) = e.method_name.as_deref() else {
            continue;
        };
        if filter.is_some_and(|f| !f.matches(api)) {
            continue;
        }
        *counts.entry(api).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(api, count)| Appearance {
            origin: origin.to_string(),
            api: api.to_string(),
            count,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaClass {
    Equal,
    More,
    Fewer,
}

impl DeltaClass {
    pub fn of(baseline: u64, other: u64) -> Self {
        match other.cmp(&baseline) {
            std::cmp::Ordering::Equal => DeltaClass::Equal,
            std::cmp::Ordering::Greater => DeltaClass::More,
            std::cmp::Ordering::Less => DeltaClass::Fewer,
        }
    }
}

impl fmt::Display for DeltaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeltaClass::Equal => "equal",
            DeltaClass::More => "more",
            DeltaClass::Fewer => "fewer",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppearanceDelta {
    pub origin: String,
    pub api: String,
    pub baseline_count: u64,
    pub other_count: u64,
    pub class: DeltaClass,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DeltaSummary {
    pub equal: usize,
    pub more: usize,
    pub fewer: usize,
}

impl DeltaSummary {
    pub fn total(&self) -> usize {
        self.equal + self.more + self.fewer
    }

    fn bump(&mut self, class: DeltaClass) {
        match class {
            DeltaClass::Equal => self.equal += 1,
            DeltaClass::More => self.more += 1,
            DeltaClass::Fewer => self.fewer += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppearanceComparison {
    /// One per baseline appearance; pairs missing from the other side
    /// count as zero invocations there.
    pub deltas: Vec<AppearanceDelta>,
    /// Pairs present only on the other side.
    pub extras: Vec<Appearance>,
    pub summary: DeltaSummary,
}

impl AppearanceComparison {
    /// Per-origin relative difference in invocation counts,
    /// `Σ|other − baseline| / Σ baseline`, averaged over baseline origins.
    pub fn mean_origin_difference(&self) -> f64 {
        let mut per_origin: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        for d in &self.deltas {
            let slot = per_origin.entry(&d.origin).or_insert((0, 0));
            slot.0 += d.baseline_count.abs_diff(d.other_count);
            slot.1 += d.baseline_count;
        }
        if per_origin.is_empty() {
            return 0.0;
        }
        let sum: f64 = per_origin
            .values()
            .map(|&(diff, base)| {
                if base == 0 {
                    0.0
                } else {
                    diff as f64 / base as f64
                }
            })
            .sum();
        sum / per_origin.len() as f64
    }
}

pub fn compare_appearances(baseline: &[Appearance], other: &[Appearance]) -> AppearanceComparison {
    let base = to_set(baseline.iter().cloned());
    let other = to_set(other.iter().cloned());
    let mut deltas = Vec::with_capacity(base.len());
    let mut summary = DeltaSummary::default();
    for ((origin, api), &b) in &base {
        let o = other
            .get(&(origin.clone(), api.clone()))
            .copied()
            .unwrap_or(0);
        let class = DeltaClass::of(b, o);
        summary.bump(class);
        deltas.push(AppearanceDelta {
            origin: origin.clone(),
            api: api.clone(),
            baseline_count: b,
            other_count: o,
            class,
        });
    }
    let base_keys: BTreeSet<_> = base.keys().collect();
    let extras = other
        .iter()
        .filter(|(k, _)| !base_keys.contains(k))
        .map(|((origin, api), &count)| Appearance {
            origin: origin.clone(),
            api: api.clone(),
            count,
        })
        .collect();
    AppearanceComparison {
        deltas,
        extras,
        summary,
    }
}
