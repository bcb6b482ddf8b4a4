/// A synthetic host and the registrable domain it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownHost {
    pub host: &'static str,
    pub site: &'static str,
    pub serves_scripts: bool,
}

const fn host(host: &'static str, site: &'static str, serves_scripts: bool) -> KnownHost {
    KnownHost {
        host,
        site,
        serves_scripts,
    }
}

/// Third parties the generator draws from. Sites are written out by hand
/// rather than computed, so ledgers do not depend on suffix matching.
pub const THIRD_PARTIES: &[KnownHost] = &[
    host("www.googletagmanager.com", "googletagmanager.com", true),
    host("www.google-analytics.com", "google-analytics.com", true),
    host("cdn.jsdelivr.net", "jsdelivr.net", true),
    host("connect.facebook.net", "facebook.net", true),
    host("assets.adobedtm.com", "adobedtm.com", true),
    host("static.xhcdn.com", "xhcdn.com", true),
    host("stats.doubleclick.net", "doubleclick.net", false),
    host("fonts.gstatic.com", "gstatic.com", false),
    host("img.widgets.news.co.uk", "news.co.uk", false),
    host("pixel.adtrack.example", "adtrack.example", false),
    host("demo-user.github.io", "demo-user.github.io", true),
];

pub const FIRST_PARTY_SUBDOMAINS: &[&str] = &["www", "static", "api"];

pub const SITE_WORDS: &[&str] = &[
    "news", "shop", "travel", "forum", "bank", "recipes", "sports", "games", "weather", "video",
];

pub const API_NAMES: &[&str] = &[
    "CSSStyleDeclaration.getPropertyValue",
    "CSSStyleDeclaration.setProperty",
    "CSSStyleSheet.insertRule",
    "CSSRuleList.item",
    "StyleSheetList.item",
    "Window.getComputedStyle",
    "Element.getBoundingClientRect",
    "MessagePort.postMessage",
    "MessageChannel.constructor",
    "MessagePort.start",
    "Window.postMessage",
    "BroadcastChannel.postMessage",
    "Document.createElement",
    "Node.appendChild",
    "Element.setAttribute",
    "Storage.getItem",
    "Navigator.userAgent",
];

pub const EVENT_KEYS: &[&str] = &["click", "load", "mouseover", "submit", "message", "error"];

pub const FETCH_APIS: &[&str] = &["Window.fetch", "XMLHttpRequest.send"];

pub fn third_party_site(host_name: &str) -> Option<&'static str> {
    THIRD_PARTIES
        .iter()
        .find(|h| h.host == host_name)
        .map(|h| h.site)
}
