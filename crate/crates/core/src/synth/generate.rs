use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hosts::{
    API_NAMES, EVENT_KEYS, FETCH_APIS, FIRST_PARTY_SUBDOMAINS, SITE_WORDS, THIRD_PARTIES,
};
use super::{stream_seed, NoiseKind, Redirect, Scenario, ScenarioEvent, Size};

struct Element {
    handle: u32,
    tag: &'static str,
    loaded: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    site: String,
    events: Vec<ScenarioEvent>,
    elements: Vec<Element>,
    scripts: Vec<u32>,
    documents: Vec<u32>,
    next_element: u32,
    next_script: u32,
    next_document: u32,
    urls: u64,
}

impl Gen {
    fn host(&mut self, third_party: bool, scripts_only: bool) -> String {
        if third_party {
            let pool: Vec<_> = THIRD_PARTIES
                .iter()
                .filter(|h| !scripts_only || h.serves_scripts)
                .collect();
            pool.choose(&mut self.rng)
                .expect("host table is not empty")
                .host
                .to_string()
        } else {
            let sub = FIRST_PARTY_SUBDOMAINS.choose(&mut self.rng).unwrap();
            format!("{sub}.{}", self.site)
        }
    }

    /// A fresh absolute URL; the counter keeps every URL in a scenario
    /// distinct.
    fn url(&mut self, host: &str, dir: &str, ext: &str) -> String {
        self.urls += 1;
        format!("https://{host}/{dir}/r{}.{ext}", self.urls)
    }

    fn parser_element(&mut self, tag: &'static str, frame: Option<u32>) -> u32 {
        let handle = self.next_element;
        self.next_element += 1;
        let mut attrs = std::collections::BTreeMap::new();
        if tag == "SCRIPT" && self.rng.gen_bool(0.3) {
            attrs.insert("defer".to_string(), String::new());
        }
        self.events.push(ScenarioEvent::ParserCreatesElement {
            element: handle,
            tag: tag.to_string(),
            attrs,
            frame,
        });
        self.elements.push(Element {
            handle,
            tag,
            loaded: false,
        });
        handle
    }

    fn script_element(&mut self, script: u32, tag: &'static str) -> u32 {
        let handle = self.next_element;
        self.next_element += 1;
        self.events.push(ScenarioEvent::ScriptCreatesElement {
            script,
            element: handle,
            tag: tag.to_string(),
        });
        self.elements.push(Element {
            handle,
            tag,
            loaded: false,
        });
        handle
    }

    fn load_script(&mut self, element: u32, url: Option<String>) -> u32 {
        let script = self.next_script;
        self.next_script += 1;
        self.events.push(ScenarioEvent::ScriptLoaded {
            script,
            element,
            url,
        });
        self.scripts.push(script);
        if let Some(e) = self.elements.iter_mut().find(|e| e.handle == element) {
            e.loaded = true;
        }
        script
    }

    fn pick_script(&mut self) -> Option<u32> {
        self.scripts.choose(&mut self.rng).copied()
    }

    fn pick_element(&mut self, tags: &[&str], unloaded: bool) -> Option<u32> {
        let pool: Vec<u32> = self
            .elements
            .iter()
            .filter(|e| tags.contains(&e.tag) && (!unloaded || !e.loaded))
            .map(|e| e.handle)
            .collect();
        pool.choose(&mut self.rng).copied()
    }

    /// A SCRIPT element that has not run yet, created on demand.
    fn pending_script_element(&mut self) -> u32 {
        if let Some(e) = self.pick_element(&["SCRIPT"], true) {
            return e;
        }
        match self.pick_script() {
            Some(s) if self.rng.gen_bool(0.4) => self.script_element(s, "SCRIPT"),
            _ => self.parser_element("SCRIPT", None),
        }
    }

    fn script_url(&mut self) -> Option<String> {
        if !self.rng.gen_bool(0.75) {
            return None;
        }
        let third = self.rng.gen_bool(0.6);
        let host = self.host(third, true);
        Some(self.url(&host, "js", "js"))
    }

    fn redirects(&mut self) -> Vec<Redirect> {
        let hops = match self.rng.gen_range(0..100) {
            0..=74 => 0,
            75..=94 => 1,
            _ => 2,
        };
        (0..hops)
            .map(|_| {
                let third = self.rng.gen_bool(0.5);
                let host = self.host(third, false);
                Redirect {
                    status: *[301u16, 302].choose(&mut self.rng).unwrap(),
                    url: self.url(&host, "img", "png"),
                }
            })
            .collect()
    }

    fn step(&mut self) {
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=11 => {
                let tag = *["IMG", "SCRIPT", "DIV", "BUTTON", "LINK", "IFRAME"]
                    .choose(&mut self.rng)
                    .unwrap();
                let framed = !matches!(tag, "SCRIPT" | "IFRAME") && self.rng.gen_bool(0.25);
                let frame = if framed {
                    self.documents.choose(&mut self.rng).copied()
                } else {
                    None
                };
                self.parser_element(tag, frame);
            }
            12..=21 => {
                let element = self.pending_script_element();
                let url = self.script_url();
                self.load_script(element, url);
            }
            22..=39 => {
                let Some(script) = self.pick_script() else {
                    return;
                };
                let api = API_NAMES.choose(&mut self.rng).unwrap().to_string();
                let times = self.rng.gen_range(1..=6);
                self.events
                    .push(ScenarioEvent::ScriptCallsApi { script, api, times });
            }
            40..=47 => {
                let Some(script) = self.pick_script() else {
                    return;
                };
                let Some(element) =
                    self.pick_element(&["IMG", "DIV", "BUTTON", "LINK", "IFRAME"], false)
                else {
                    return;
                };
                let key = EVENT_KEYS.choose(&mut self.rng).unwrap().to_string();
                let inline = self.rng.gen_bool(0.5);
                self.events.push(ScenarioEvent::ScriptAddsListener {
                    script,
                    element,
                    key,
                    inline,
                });
            }
            48..=52 => {
                let Some(element) = self.pick_element(&["IMG", "DIV", "BUTTON", "IFRAME"], false)
                else {
                    return;
                };
                let key = EVENT_KEYS.choose(&mut self.rng).unwrap().to_string();
                self.events
                    .push(ScenarioEvent::ParserAddsListener { element, key });
            }
            53..=60 => {
                let Some(script) = self.pick_script() else {
                    return;
                };
                let tag = *["SCRIPT", "IMG", "IFRAME", "LINK", "DIV"]
                    .choose(&mut self.rng)
                    .unwrap();
                self.script_element(script, tag);
            }
            61..=77 => {
                let element = match self.pick_element(&["IMG", "LINK"], false) {
                    Some(e) => e,
                    None => self.parser_element("IMG", None),
                };
                let third = self.rng.gen_bool(0.5);
                let host = self.host(third, false);
                let url = self.url(&host, "img", "png");
                let redirects = self.redirects();
                let status = if self.rng.gen_bool(0.9) { 200 } else { 404 };
                self.events.push(ScenarioEvent::ElementRequests {
                    element,
                    url,
                    redirects,
                    status,
                });
            }
            78..=85 => {
                let Some(script) = self.pick_script() else {
                    return;
                };
                let third = self.rng.gen_bool(0.4);
                let host = self.host(third, false);
                let url = self.url(&host, "api", "json");
                let method = if self.rng.gen_bool(0.7) {
                    "GET"
                } else {
                    "POST"
                }
                .to_string();
                let api = FETCH_APIS.choose(&mut self.rng).unwrap().to_string();
                self.events.push(ScenarioEvent::FetchRequest {
                    script,
                    url,
                    method,
                    api,
                });
            }
            86..=90 => {
                let element = match self.pick_element(&["IFRAME"], true) {
                    Some(e) => e,
                    None => self.parser_element("IFRAME", None),
                };
                let third = self.rng.gen_bool(0.5);
                let host = self.host(third, false);
                let url = self.url(&host, "frame", "html");
                let document = self.next_document;
                self.next_document += 1;
                self.events.push(ScenarioEvent::DocumentEmbedded {
                    element,
                    document,
                    url,
                });
                self.documents.push(document);
                if let Some(e) = self.elements.iter_mut().find(|e| e.handle == element) {
                    e.loaded = true;
                }
            }
            _ => {
                let noise = *[
                    NoiseKind::Preflight,
                    NoiseKind::CspReport,
                    NoiseKind::WebSocket,
                    NoiseKind::BrowserInternal,
                    NoiseKind::ServiceWorker,
                ]
                .choose(&mut self.rng)
                .unwrap();
                self.urls += 1;
                let n = self.urls;
                let url = match noise {
                    NoiseKind::Preflight => {
                        let host = self.host(true, false);
                        format!("https://{host}/api/r{n}.json")
                    }
                    NoiseKind::CspReport => format!("https://www.{}/csp-report/r{n}", self.site),
                    NoiseKind::WebSocket => format!("wss://api.{}/socket/r{n}", self.site),
                    NoiseKind::BrowserInternal => {
                        format!("https://update.googleapis.com/service/update2/json?r={n}")
                    }
                    NoiseKind::ServiceWorker => format!("https://www.{}/sw/r{n}.js", self.site),
                };
                self.events.push(ScenarioEvent::HarNoise { noise, url });
            }
        }
    }
}

/// Generates a race-free scenario. The same `(seed, size)` always yields
/// the same scenario.
pub fn generate_scenario(seed: u64, size: Size) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, size));
    let word = SITE_WORDS.choose(&mut rng).unwrap();
    let site = format!("{word}{seed}.com");
    let page_origin = format!("https://www.{site}");
    let mut g = Gen {
        rng,
        site: site.clone(),
        events: Vec::new(),
        elements: Vec::new(),
        scripts: Vec::new(),
        documents: Vec::new(),
        next_element: 0,
        next_script: 0,
        next_document: 0,
        urls: 0,
    };

    if g.rng.gen_bool(0.4) {
        g.events.push(ScenarioEvent::InitialRedirect {
            url: format!("http://{site}/"),
            status: 301,
        });
        if g.rng.gen_bool(0.3) {
            g.events.push(ScenarioEvent::InitialRedirect {
                url: format!("https://{site}/"),
                status: 302,
            });
        }
    }

    let mut script_hosts: Vec<_> = THIRD_PARTIES.iter().filter(|h| h.serves_scripts).collect();
    script_hosts.shuffle(&mut g.rng);
    for h in script_hosts.into_iter().take(size.forced_third_parties()) {
        let element = g.parser_element("SCRIPT", None);
        let url = g.url(h.host, "js", "js");
        g.load_script(element, Some(url));
    }
    // One first-party inline script so every page has a party-less actor.
    let element = g.parser_element("SCRIPT", None);
    g.load_script(element, None);

    let target = size.target_events();
    while g.events.len() < target {
        g.step();
    }
    Scenario {
        seed,
        size,
        site,
        page_origin,
        events: g.events,
    }
}

/// Appends `k` late image requests that reach the graph but not the HAR.
pub fn inject_races(scenario: &mut Scenario, k: usize) {
    let next_element = scenario
        .events
        .iter()
        .filter_map(|e| match e {
            ScenarioEvent::ParserCreatesElement { element, .. }
            | ScenarioEvent::ScriptCreatesElement { element, .. } => Some(*element + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let already = scenario.count("inject_race");
    for (i, element) in (next_element..).take(k).enumerate() {
        scenario.events.push(ScenarioEvent::ParserCreatesElement {
            element,
            tag: "IMG".into(),
            attrs: Default::default(),
            frame: None,
        });
        scenario.events.push(ScenarioEvent::InjectRace {
            element,
            url: format!(
                "https://stats.doubleclick.net/late/{}-{}.gif",
                scenario.seed,
                already + i
            ),
        });
    }
}
