//! The `webbundle` command line. Data goes to `out`, diagnostics to `err`.

mod corpus;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use corpus::{CorpusEntry, CorpusManifest};

use crate::bundle::{
    load_bundle, pack_bundle, read_members, validate_bundle, write_bundle, WebBundle,
};
use crate::harfilter::{
    diff_requests, filter_page_context, FilterReason, InternalUrlList, RequestDiff,
};
use crate::queries::{
    attribute_requests, count_api_appearances, detect_inline_event_handlers, extract_requests,
    Adder, ApiFilter, AttributedRequest, AttributionTable,
};
use crate::report::Severity;
use crate::synth::{generate_scenario, inject_races, scenario_to_bundle, Size};
use crate::trackers::{
    FilterList, PrevalenceAccumulator, RequestSource, SuffixList, DEFAULT_MIN_FIRST_PARTIES,
};

pub const SUFFIX_DATA_ENV: &str = "WEBBUNDLE_SUFFIX_DATA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Graph,
    Har,
}

#[derive(Debug, Parser)]
#[command(
    name = "webbundle",
    version,
    about = "Inspect, generate, and query .web page-execution bundles"
)]
struct Cli {
    /// Output format for data on stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Exit 1 when validation reports findings or a corpus bundle fails to load.
    #[arg(long, global = true)]
    strict: bool,
    /// Public suffix list to use instead of the bundled snapshot.
    #[arg(long, global = true, value_name = "FILE")]
    suffix_data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every bundle, graph, and HAR invariant.
    Validate { bundle: PathBuf },
    /// Member sizes and graph counts.
    Stats { bundle: PathBuf },
    /// Pack a bundle directory into a .web container.
    Pack {
        dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Gzip each member inside the container.
        #[arg(long)]
        compress: bool,
    },
    #[command(subcommand)]
    Query(Query),
    /// Compare graph requests with page-context HAR entries.
    DiffHar {
        bundle: PathBuf,
        #[arg(long, value_name = "FILE")]
        internal_urls: Option<PathBuf>,
    },
    /// Third-party prevalence over a corpus.
    ThirdParties(ThirdPartiesArgs),
    /// Context and responsible party of requests towards one domain.
    Attribute {
        #[arg(long)]
        corpus: PathBuf,
        /// Registrable domain, e.g. googletagmanager.com.
        #[arg(long)]
        target: String,
    },
    /// Generate a synthetic bundle with its ledger.
    Synth {
        #[arg(long)]
        seed: u64,
        /// small, medium, large, or an event count.
        #[arg(long, default_value = "medium")]
        size: Size,
        #[arg(short, long)]
        out: PathBuf,
        /// Requests that reach the graph but not the HAR.
        #[arg(long, default_value_t = 0)]
        races: usize,
        #[arg(long)]
        compress: bool,
    },
}

#[derive(Debug, Subcommand)]
enum Query {
    /// API invocation counts for the page origin.
    ApiCalls {
        bundle: PathBuf,
        /// Prefix list restricting which APIs are counted.
        #[arg(long, value_name = "FILE")]
        apis: Option<PathBuf>,
    },
    /// Event listeners and whether they were installed inline.
    Handlers { bundle: PathBuf },
    /// Requests recorded in the graph.
    Requests {
        bundle: PathBuf,
        /// Resolve context and responsible party.
        #[arg(long)]
        attribute: bool,
    },
}

#[derive(Debug, Args)]
struct ThirdPartiesArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Filter list; repeat to combine several.
    #[arg(long = "list", required = true, value_name = "FILE")]
    lists: Vec<PathBuf>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MIN_FIRST_PARTIES)]
    min_first_parties: usize,
    #[arg(long, value_enum, default_value = "graph")]
    source: Source,
    #[arg(long, value_name = "FILE")]
    internal_urls: Option<PathBuf>,
}

/// Failure after arguments parsed; exit code 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs one invocation and returns the exit code: 0 on success, 1 on
/// runtime errors or on findings under `--strict`, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    let mut ctx = Ctx {
        format: cli.format,
        strict: cli.strict,
        suffix_data: cli.suffix_data,
        out,
        err,
    };
    let result = ctx.dispatch(cli.command);
    let code = match result {
        Ok(code) => code,
        Err(Failure(message)) => {
            let _ = writeln!(ctx.err, "error: {message}");
            1
        }
    };
    let _ = ctx.out.flush();
    code
}

struct Ctx<'a> {
    format: Format,
    strict: bool,
    suffix_data: Option<PathBuf>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn dispatch(&mut self, command: Command) -> Outcome {
        match command {
            Command::Validate { bundle } => self.validate(&bundle),
            Command::Stats { bundle } => self.stats(&bundle),
            Command::Pack { dir, out, compress } => self.pack(&dir, &out, compress),
            Command::Query(Query::ApiCalls { bundle, apis }) => {
                self.api_calls(&bundle, apis.as_deref())
            }
            Command::Query(Query::Handlers { bundle }) => self.handlers(&bundle),
            Command::Query(Query::Requests { bundle, attribute }) => {
                self.requests(&bundle, attribute)
            }
            Command::DiffHar {
                bundle,
                internal_urls,
            } => self.diff_har(&bundle, internal_urls.as_deref()),
            Command::ThirdParties(args) => self.third_parties(args),
            Command::Attribute { corpus, target } => self.attribute(&corpus, &target),
            Command::Synth {
                seed,
                size,
                out,
                races,
                compress,
            } => self.synth(seed, size, &out, races, compress),
        }
    }

    fn suffixes(&self) -> Result<SuffixList, Failure> {
        let path = self.suffix_data.clone().or_else(|| {
            std::env::var_os(SUFFIX_DATA_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        });
        match path {
            Some(p) => Ok(SuffixList::from_file(&p)?),
            None => Ok(SuffixList::bundled().clone()),
        }
    }

    fn json_line<T: Serialize>(&mut self, value: &T) -> Result<(), Failure> {
        serde_json::to_writer(&mut *self.out, value)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    /// JSON lines, or CSV with `header` even when there are no rows.
    fn emit<T: Serialize>(
        &mut self,
        header: &[&str],
        rows: &[T],
        csv_row: impl Fn(&T) -> Vec<String>,
    ) -> Result<(), Failure> {
        match self.format {
            Format::Json => {
                for r in rows {
                    self.json_line(r)?;
                }
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .has_headers(false)
                    .from_writer(&mut *self.out);
                w.write_record(header)?;
                for r in rows {
                    w.write_record(csv_row(r))?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    fn warn(&mut self, message: impl std::fmt::Display) {
        let _ = writeln!(self.err, "warning: {message}");
    }

    fn validate(&mut self, path: &Path) -> Outcome {
        let bundle = read_members(path)?.parse()?;
        let report = validate_bundle(&bundle);
        let errors = report
            .findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .count();
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Report<'a> {
                    path: String,
                    findings: &'a [crate::report::Finding],
                    errors: usize,
                    warnings: usize,
                }
                self.json_line(&Report {
                    path: path.display().to_string(),
                    findings: &report.findings,
                    errors,
                    warnings: report.findings.len() - errors,
                })?;
            }
            Format::Csv => {
                self.emit(
                    &["member", "code", "severity", "message"],
                    &report.findings,
                    |f| {
                        vec![
                            f.member.into(),
                            f.code.into(),
                            f.severity.to_string(),
                            f.message.clone(),
                        ]
                    },
                )?;
            }
        }
        Ok(if self.strict && !report.is_empty() {
            1
        } else {
            0
        })
    }

    fn stats(&mut self, path: &Path) -> Outcome {
        let bundle = load_bundle(path)?;
        let stats = bundle_stats(&bundle);
        match self.format {
            Format::Json => self.json_line(&stats)?,
            Format::Csv => {
                let rows = stats.key_values();
                self.emit(&["key", "value"], &rows, |(k, v)| {
                    vec![k.clone(), v.clone()]
                })?;
            }
        }
        Ok(0)
    }

    fn pack(&mut self, dir: &Path, out: &Path, compress: bool) -> Outcome {
        let summary = pack_bundle(dir, out, compress)?;
        match self.format {
            Format::Json => self.json_line(&summary)?,
            Format::Csv => {
                self.emit(
                    &["member", "stored_name", "bytes", "stored_bytes"],
                    &summary.members,
                    |m| {
                        vec![
                            m.name.into(),
                            m.stored_name.clone(),
                            m.bytes.to_string(),
                            m.stored_bytes.to_string(),
                        ]
                    },
                )?;
            }
        }
        Ok(0)
    }

    fn api_calls(&mut self, path: &Path, apis: Option<&Path>) -> Outcome {
        let bundle = load_bundle(path)?;
        let filter = apis.map(ApiFilter::from_file).transpose()?;
        let rows =
            count_api_appearances(&bundle.graph, &bundle.manifest.page_origin, filter.as_ref());
        self.emit(&["origin", "api", "count"], &rows, |a| {
            vec![a.origin.clone(), a.api.clone(), a.count.to_string()]
        })?;
        Ok(0)
    }

    fn handlers(&mut self, path: &Path) -> Outcome {
        let bundle = load_bundle(path)?;
        let findings = detect_inline_event_handlers(&bundle.graph, &bundle.manifest.page_origin)?;
        let header = [
            "edge_id",
            "element_node",
            "event_key",
            "listener_script",
            "adder",
            "classification",
            "frame_origin",
            "cross_origin",
        ];
        self.emit(&header, &findings, |f| {
            let adder = match f.adder {
                Adder::Parser => "parser".to_string(),
                Adder::Script(n) => format!("script:{n}"),
            };
            vec![
                f.edge_id.to_string(),
                f.element_node.to_string(),
                f.event_key.clone(),
                f.listener_script.to_string(),
                adder,
                f.classification.to_string(),
                f.frame_origin.clone(),
                f.cross_origin.to_string(),
            ]
        })?;
        Ok(0)
    }

    fn requests(&mut self, path: &Path, attribute: bool) -> Outcome {
        let bundle = load_bundle(path)?;
        let requests = if attribute {
            let suffixes = self.suffixes()?;
            let a = attribute_requests(&bundle.graph, &bundle.manifest.page_origin, &suffixes)?;
            for w in &a.warnings {
                self.warn(format_args!("{}: {}", w.request, w.message));
            }
            a.requests
        } else {
            extract_requests(&bundle.graph)?
        };
        let header = [
            "request",
            "initiator",
            "http_method",
            "first_url",
            "final_url",
            "hops",
            "redirect_statuses",
            "completed",
            "context",
            "responsible_party",
        ];
        self.emit(&header, &requests, request_row)?;
        Ok(0)
    }

    fn diff_har(&mut self, path: &Path, internal_urls: Option<&Path>) -> Outcome {
        let bundle = load_bundle(path)?;
        let internal = match internal_urls {
            Some(p) => InternalUrlList::from_file(p)?,
            None => InternalUrlList::bundled(),
        };
        let page = filter_page_context(&bundle.har, &bundle.manifest, &internal);
        let requests = extract_requests(&bundle.graph)?;
        let diff = diff_requests(&requests, &page.kept);
        let mut excluded: BTreeMap<&'static str, usize> = BTreeMap::new();
        for v in page.verdicts.iter().filter(|v| !v.kept) {
            *excluded.entry(v.reason.as_str()).or_insert(0) += 1;
        }
        let report = DiffReport {
            har_entries: bundle.har.entries.len(),
            kept: page.kept.len(),
            excluded,
            diff,
        };
        match self.format {
            Format::Json => self.json_line(&report)?,
            Format::Csv => {
                let header = [
                    "har_entries",
                    "kept",
                    "excluded",
                    "matched",
                    "har_only",
                    "graph_only",
                    "har_total",
                    "graph_total",
                    "relative_difference",
                ];
                self.emit(&header, std::slice::from_ref(&report), |r| {
                    vec![
                        r.har_entries.to_string(),
                        r.kept.to_string(),
                        (r.har_entries - r.kept).to_string(),
                        r.diff.matched.to_string(),
                        r.diff.har_only.len().to_string(),
                        r.diff.graph_only.len().to_string(),
                        r.diff.har_total.to_string(),
                        r.diff.graph_total.to_string(),
                        r.diff.relative_difference.to_string(),
                    ]
                })?;
            }
        }
        Ok(0)
    }

    fn load_corpus(&mut self, path: &Path) -> Result<CorpusManifest, Failure> {
        let manifest = CorpusManifest::load(path).map_err(Failure)?;
        for e in &manifest.bundles {
            let p = manifest.resolve(e);
            if !p.exists() {
                return Err(Failure(format!(
                    "corpus bundle {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(manifest)
    }

    /// Visits corpus bundles one at a time. Load failures are warnings,
    /// or errors under `--strict`.
    fn each_bundle(
        &mut self,
        corpus: &CorpusManifest,
        mut visit: impl FnMut(&mut Self, &CorpusEntry, WebBundle) -> Result<(), Failure>,
    ) -> Result<(), Failure> {
        for (entry, loaded) in corpus.bundles() {
            let path = corpus.resolve(entry);
            match loaded {
                Ok(bundle) => {
                    if bundle.manifest.page_origin != entry.page_origin {
                        self.warn(format_args!(
                            "{}: corpus lists origin {} but the bundle records {}",
                            path.display(),
                            entry.page_origin,
                            bundle.manifest.page_origin
                        ));
                    }
                    visit(self, entry, bundle)?;
                }
                Err(e) if self.strict => return Err(Failure(format!("{}: {e}", path.display()))),
                Err(e) => self.warn(format_args!("{}: skipped: {e}", path.display())),
            }
        }
        Ok(())
    }

    fn third_parties(&mut self, args: ThirdPartiesArgs) -> Outcome {
        let corpus = self.load_corpus(&args.corpus)?;
        let suffixes = self.suffixes()?;
        let mut hasher = Sha256::new();
        let mut lists = Vec::new();
        for p in &args.lists {
            let bytes = std::fs::read(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            hasher.update(&bytes);
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let list = FilterList::parse(&String::from_utf8_lossy(&bytes), name);
            self.warn(format_args!(
                "{}: {} rules, {} rule lines skipped ({} with unsupported options)",
                list.source_name,
                list.rules.len(),
                list.skipped.unsupported(),
                list.skipped.unsupported_option
            ));
            lists.push(list);
        }
        let list_sha256 = format!("{:x}", hasher.finalize());
        let list = FilterList::combine(lists);
        let internal = match &args.internal_urls {
            Some(p) => InternalUrlList::from_file(p)?,
            None => InternalUrlList::bundled(),
        };
        let source = match args.source {
            Source::Graph => RequestSource::Graph,
            Source::Har => RequestSource::Har(&internal),
        };
        let mut acc = PrevalenceAccumulator::new();
        self.each_bundle(&corpus, |_, _, bundle| {
            acc.add_bundle(&bundle, source, &list, &suffixes);
            Ok(())
        })?;
        let mut stats = acc.finish(args.min_first_parties);
        if let Some(n) = args.top {
            stats.truncate(n);
        }
        let rows: Vec<ThirdPartyRow> = stats
            .into_iter()
            .enumerate()
            .map(|(i, s)| ThirdPartyRow {
                rank: i + 1,
                third_party: s.third_party,
                first_party_count: s.first_party_count,
                request_count: s.request_count,
                tracking: s.tracking,
                list_sha256: list_sha256.clone(),
            })
            .collect();
        let header = [
            "rank",
            "third_party",
            "first_party_count",
            "request_count",
            "tracking",
            "list_sha256",
        ];
        self.emit(&header, &rows, |r| {
            vec![
                r.rank.to_string(),
                r.third_party.clone(),
                r.first_party_count.to_string(),
                r.request_count.to_string(),
                r.tracking.to_string(),
                r.list_sha256.clone(),
            ]
        })?;
        Ok(0)
    }

    fn attribute(&mut self, corpus_path: &Path, target: &str) -> Outcome {
        let corpus = self.load_corpus(corpus_path)?;
        let suffixes = self.suffixes()?;
        let target = target.trim().to_ascii_lowercase();
        let mut table = AttributionTable::new();
        self.each_bundle(&corpus, |ctx, entry, bundle| {
            let origin = &bundle.manifest.page_origin;
            match attribute_requests(&bundle.graph, origin, &suffixes) {
                Ok(a) => {
                    for w in &a.warnings {
                        ctx.warn(format_args!(
                            "{}: {}: {}",
                            entry.path.display(),
                            w.request,
                            w.message
                        ));
                    }
                    table.add(origin, &a.requests, &target, &suffixes);
                }
                Err(e) if ctx.strict => {
                    return Err(Failure(format!("{}: {e}", entry.path.display())))
                }
                Err(e) => ctx.warn(format_args!("{}: skipped: {e}", entry.path.display())),
            }
            Ok(())
        })?;
        let rows: Vec<AttributeRow> = table
            .rows()
            .into_iter()
            .map(|g| AttributeRow {
                target: target.clone(),
                context: g.context.to_string(),
                responsible_party: g.responsible_party.to_string(),
                requests: g.requests,
                origins: g.origins,
            })
            .collect();
        self.emit(
            &[
                "target",
                "context",
                "responsible_party",
                "requests",
                "origins",
            ],
            &rows,
            |r| {
                vec![
                    r.target.clone(),
                    r.context.clone(),
                    r.responsible_party.clone(),
                    r.requests.to_string(),
                    r.origins.to_string(),
                ]
            },
        )?;
        Ok(0)
    }

    fn synth(
        &mut self,
        seed: u64,
        size: Size,
        out: &Path,
        races: usize,
        compress: bool,
    ) -> Outcome {
        let mut scenario = generate_scenario(seed, size);
        inject_races(&mut scenario, races);
        let synth = scenario_to_bundle(&scenario)
            .map_err(|e| Failure(format!("generated scenario is invalid: {e}")))?;
        let summary = write_bundle(&synth.bundle, out, compress)?;
        let ledger = sidecar(out, "ledger.json");
        let scenario_path = sidecar(out, "scenario.json");
        std::fs::write(&ledger, synth.ledger.to_json())?;
        std::fs::write(&scenario_path, scenario.to_json())?;
        let row = SynthRow {
            path: out.display().to_string(),
            seed,
            size: size.to_string(),
            events: scenario.events.len(),
            nodes: summary.nodes,
            edges: summary.edges,
            har_entries: summary.har_entries,
            races,
            ledger: ledger.display().to_string(),
            scenario: scenario_path.display().to_string(),
        };
        let header = [
            "path",
            "seed",
            "size",
            "events",
            "nodes",
            "edges",
            "har_entries",
            "races",
            "ledger",
            "scenario",
        ];
        self.emit(&header, std::slice::from_ref(&row), |r| {
            vec![
                r.path.clone(),
                r.seed.to_string(),
                r.size.clone(),
                r.events.to_string(),
                r.nodes.to_string(),
                r.edges.to_string(),
                r.har_entries.to_string(),
                r.races.to_string(),
                r.ledger.clone(),
                r.scenario.clone(),
            ]
        })?;
        Ok(0)
    }
}

/// `out.web` -> `out.web.<suffix>`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

fn request_row(r: &AttributedRequest) -> Vec<String> {
    let statuses: Vec<String> = r
        .redirect_statuses
        .iter()
        .map(|s| s.map(|s| s.to_string()).unwrap_or_default())
        .collect();
    vec![
        r.request.to_string(),
        r.initiator.to_string(),
        r.http_method.clone(),
        r.first_url.clone(),
        r.final_url.clone(),
        r.urls.len().saturating_sub(1).to_string(),
        statuses.join(" "),
        r.completed.to_string(),
        r.context
            .as_ref()
            .map(|c| c.to_string())
            .unwrap_or_default(),
        r.responsible_party
            .as_ref()
            .map(|p| p.to_string())
            .unwrap_or_default(),
    ]
}

#[derive(Serialize)]
struct DiffReport {
    har_entries: usize,
    kept: usize,
    excluded: BTreeMap<&'static str, usize>,
    #[serde(flatten)]
    diff: RequestDiff,
}

#[derive(Serialize)]
struct ThirdPartyRow {
    rank: usize,
    third_party: String,
    first_party_count: usize,
    request_count: u64,
    tracking: bool,
    list_sha256: String,
}

#[derive(Serialize)]
struct AttributeRow {
    target: String,
    context: String,
    responsible_party: String,
    requests: u64,
    origins: usize,
}

#[derive(Serialize)]
struct SynthRow {
    path: String,
    seed: u64,
    size: String,
    events: usize,
    nodes: usize,
    edges: usize,
    har_entries: usize,
    races: usize,
    ledger: String,
    scenario: String,
}

#[derive(Serialize)]
struct BundleStats {
    page_origin: String,
    initial_url: String,
    final_url: String,
    captured_at: String,
    nodes: usize,
    edges: usize,
    node_types: BTreeMap<&'static str, usize>,
    edge_types: BTreeMap<&'static str, usize>,
    documents: usize,
    request_chains: Option<usize>,
    har_entries: usize,
    har_page_context: usize,
    screenshot_bytes: Option<usize>,
}

impl BundleStats {
    fn key_values(&self) -> Vec<(String, String)> {
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut rows = vec![
            ("page_origin".to_string(), self.page_origin.clone()),
            ("initial_url".into(), self.initial_url.clone()),
            ("final_url".into(), self.final_url.clone()),
            ("captured_at".into(), self.captured_at.clone()),
            ("nodes".into(), self.nodes.to_string()),
            ("edges".into(), self.edges.to_string()),
            ("documents".into(), self.documents.to_string()),
            ("request_chains".into(), opt(self.request_chains)),
            ("har_entries".into(), self.har_entries.to_string()),
            ("har_page_context".into(), self.har_page_context.to_string()),
            ("screenshot_bytes".into(), opt(self.screenshot_bytes)),
        ];
        rows.extend(
            self.node_types
                .iter()
                .map(|(k, v)| (format!("node_type.{k}"), v.to_string())),
        );
        rows.extend(
            self.edge_types
                .iter()
                .map(|(k, v)| (format!("edge_type.{k}"), v.to_string())),
        );
        rows
    }
}

fn bundle_stats(bundle: &WebBundle) -> BundleStats {
    let graph = &bundle.graph;
    let mut node_types = BTreeMap::new();
    for n in graph.nodes() {
        *node_types.entry(n.node_type.as_str()).or_insert(0) += 1;
    }
    let edge_types = graph
        .edge_type_counts()
        .into_iter()
        .map(|(t, n)| (t.as_str(), n))
        .collect();
    let page = filter_page_context(&bundle.har, &bundle.manifest, &InternalUrlList::bundled());
    let m = &bundle.manifest;
    BundleStats {
        page_origin: m.page_origin.clone(),
        initial_url: m.initial_url.clone(),
        final_url: m.final_url.clone(),
        captured_at: m.captured_at.clone(),
        nodes: graph.nodes().len(),
        edges: graph.edges().len(),
        documents: node_types.get("document").copied().unwrap_or(0),
        node_types,
        edge_types,
        request_chains: crate::graph::request_chains(graph).ok().map(|c| c.len()),
        har_entries: bundle.har.entries.len(),
        har_page_context: page
            .verdicts
            .iter()
            .filter(|v| v.reason == FilterReason::PageContext)
            .count(),
        screenshot_bytes: bundle.screenshot.as_ref().map(Vec::len),
    }
}
