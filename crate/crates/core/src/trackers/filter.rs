//! Adblock Plus network-rule subset: `||`, `|`, and plain anchors, `*` and
//! `^` in patterns, `@@` exceptions, and the `third-party` and `domain=`
//! options. Anything else is skipped and tallied.

use serde::Serialize;
use url::Url;

use super::suffix::SuffixList;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Anchor {
    /// `||`: match begins at the host or at one of its label boundaries.
    DomainAnchor,
    /// `|`: match begins at the first character of the URL.
    StartAnchor,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Token {
    Byte(u8),
    /// `*`
    Wildcard,
    /// `^`
    Separator,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleOptions {
    /// `Some(true)` for `third-party`, `Some(false)` for `~third-party`.
    pub third_party: Option<bool>,
    pub include_domains: Vec<String>,
    pub exclude_domains: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkRule {
    pub raw: String,
    pub anchor: Anchor,
    /// Trailing `|`.
    pub end_anchor: bool,
    /// Lowercased pattern without anchors or options.
    pub pattern: String,
    #[serde(skip)]
    pub tokens: Vec<Token>,
    pub options: RuleOptions,
    pub exception: bool,
}

impl NetworkRule {
    /// `|...|`
    pub fn is_exact(&self) -> bool {
        self.anchor == Anchor::StartAnchor && self.end_anchor
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SkipTally {
    pub blank: usize,
    pub comment: usize,
    pub element_hiding: usize,
    pub regex: usize,
    pub unsupported_option: usize,
    pub invalid: usize,
}

impl SkipTally {
    /// Non-blank, non-comment lines that were not turned into rules.
    pub fn unsupported(&self) -> usize {
        self.element_hiding + self.regex + self.unsupported_option + self.invalid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterList {
    pub source_name: String,
    pub rules: Vec<NetworkRule>,
    pub skipped: SkipTally,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult<'a> {
    pub blocked: bool,
    /// The blocking rule, or the exception that overrode it.
    pub rule: Option<&'a NetworkRule>,
}

enum LineKind {
    Rule(NetworkRule),
    Blank,
    Comment,
    ElementHiding,
    Regex,
    UnsupportedOption,
    Invalid,
}

const COSMETIC_MARKERS: [&str; 6] = ["##", "#@#", "#?#", "#$#", "#@$#", "#%#"];

fn classify_line(line: &str) -> LineKind {
    let line = line.trim();
    if line.is_empty() {
        return LineKind::Blank;
    }
    if line.starts_with('!') || line.starts_with('[') {
        return LineKind::Comment;
    }
    if COSMETIC_MARKERS.iter().any(|m| line.contains(m)) {
        return LineKind::ElementHiding;
    }
    let (exception, body) = match line.strip_prefix("@@") {
        Some(rest) => (true, rest),
        None => (false, line),
    };
    let (pattern, options) = split_options(body);
    if pattern.len() > 1 && pattern.starts_with('/') && pattern.ends_with('/') {
        return LineKind::Regex;
    }
    let options = match options.map(parse_options).transpose() {
        Ok(o) => o.unwrap_or_default(),
        Err(()) => return LineKind::UnsupportedOption,
    };
    let (anchor, rest) = if let Some(r) = pattern.strip_prefix("||") {
        (Anchor::DomainAnchor, r)
    } else if let Some(r) = pattern.strip_prefix('|') {
        (Anchor::StartAnchor, r)
    } else {
        (Anchor::Plain, pattern)
    };
    let (end_anchor, rest) = match rest.strip_suffix('|') {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let pattern = rest.to_ascii_lowercase();
    if pattern.is_empty() || pattern.contains('|') {
        return LineKind::Invalid;
    }
    let tokens = tokenize(&pattern);
    LineKind::Rule(NetworkRule {
        raw: line.to_string(),
        anchor,
        end_anchor,
        pattern,
        tokens,
        options,
        exception,
    })
}

/// Splits `pattern$options` at the last `$` when what follows reads as an
/// option list.
fn split_options(body: &str) -> (&str, Option<&str>) {
    if let Some((pattern, opts)) = body.rsplit_once('$') {
        let looks_like_options = !opts.is_empty()
            && opts
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b"~=|.,_-*:/".contains(&b));
        if looks_like_options {
            return (pattern, Some(opts));
        }
    }
    (body, None)
}

fn parse_options(text: &str) -> Result<RuleOptions, ()> {
    let mut options = RuleOptions::default();
    for opt in text.split(',') {
        match opt {
            "third-party" | "3p" => options.third_party = Some(true),
            "~third-party" | "first-party" | "1p" | "~3p" => options.third_party = Some(false),
            _ => {
                let Some(list) = opt.strip_prefix("domain=") else {
                    return Err(());
                };
                for d in list.split('|').filter(|d| !d.is_empty()) {
                    match d.strip_prefix('~') {
                        Some(ex) => options.exclude_domains.push(ex.to_ascii_lowercase()),
                        None => options.include_domains.push(d.to_ascii_lowercase()),
                    }
                }
            }
        }
    }
    Ok(options)
}

pub(crate) fn tokenize(pattern: &str) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::with_capacity(pattern.len());
    for b in pattern.bytes() {
        let t = match b {
            b'*' => Token::Wildcard,
            b'^' => Token::Separator,
            other => Token::Byte(other),
        };
        if t == Token::Wildcard && tokens.last() == Some(&Token::Wildcard) {
            continue;
        }
        tokens.push(t);
    }
    tokens
}

/// Anything but a letter, digit, `_`, `-`, `.`, or `%`.
pub fn is_separator(b: u8) -> bool {
    !(b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'%'))
}

/// Simulates the pattern as a set of live token positions (a Thompson
/// NFA), so every start offset is tried in one left-to-right pass.
fn pattern_matches(tokens: &[Token], input: &[u8], starts: &[usize], end_anchor: bool) -> bool {
    let n = tokens.len();
    let mut current = vec![false; n + 1];
    let mut next = vec![false; n + 1];
    let mut start_iter = starts.iter().peekable();

    // Adds `state` and everything reachable by letting wildcards match empty.
    fn add(set: &mut [bool], tokens: &[Token], mut state: usize) {
        while !set[state] {
            set[state] = true;
            if state < tokens.len() && tokens[state] == Token::Wildcard {
                state += 1;
            } else {
                break;
            }
        }
    }
    // At end of input a separator may also match the end itself.
    fn accepts_at_end(set: &[bool], tokens: &[Token]) -> bool {
        (0..=tokens.len()).any(|s| {
            set[s]
                && tokens[s..]
                    .iter()
                    .all(|t| matches!(t, Token::Separator | Token::Wildcard))
        })
    }

    for pos in 0..=input.len() {
        while start_iter.peek().is_some_and(|&&s| s == pos) {
            add(&mut current, tokens, 0);
            start_iter.next();
        }
        if pos == input.len() {
            return accepts_at_end(&current, tokens);
        }
        if !end_anchor && current[n] {
            return true;
        }
        let byte = input[pos];
        next.iter_mut().for_each(|s| *s = false);
        let mut any = false;
        for state in 0..n {
            if !current[state] {
                continue;
            }
            let advance = match tokens[state] {
                Token::Byte(b) => b == byte,
                Token::Separator => is_separator(byte),
                Token::Wildcard => {
                    add(&mut next, tokens, state);
                    any = true;
                    false
                }
            };
            if advance {
                add(&mut next, tokens, state + 1);
                any = true;
            }
        }
        std::mem::swap(&mut current, &mut next);
        if !any && start_iter.peek().is_none() {
            return false;
        }
    }
    unreachable!("loop returns at end of input")
}

/// Byte offsets at which a `||` rule may begin: the host start and every
/// position just after a `.` inside the host.
pub(crate) fn domain_anchor_starts(url: &str, host: (usize, usize)) -> Vec<usize> {
    let bytes = url.as_bytes();
    let mut starts = vec![host.0];
    starts.extend(
        (host.0..host.1)
            .filter(|&i| bytes[i] == b'.')
            .map(|i| i + 1),
    );
    starts
}

/// A lowercased URL with its host span and party information, built once
/// and matched against many rules.
pub struct MatchTarget {
    url: String,
    host_span: (usize, usize),
    page_host: String,
    third_party: bool,
}

impl MatchTarget {
    pub fn new(url: &Url, page_origin: &str, suffixes: &SuffixList) -> Self {
        let text = url.as_str().to_ascii_lowercase();
        let host = url.host_str().unwrap_or("").to_ascii_lowercase();
        let host_start = text.find("://").map(|i| i + 3).unwrap_or(0);
        let host_start = text[host_start..]
            .find(host.as_str())
            .map(|i| i + host_start)
            .unwrap_or(host_start);
        let page_host = Url::parse(page_origin)
            .ok()
            .and_then(|u| u.host_str().map(str::to_ascii_lowercase))
            .unwrap_or_default();
        let third_party = !host.is_empty() && suffixes.site(&host) != suffixes.site(&page_host);
        MatchTarget {
            host_span: (host_start, host_start + host.len()),
            url: text,
            page_host,
            third_party,
        }
    }

    pub fn is_third_party(&self) -> bool {
        self.third_party
    }
}

fn domain_matches(host: &str, domain: &str) -> bool {
    host == domain
        || (host.len() > domain.len()
            && host.ends_with(domain)
            && host.as_bytes()[host.len() - domain.len() - 1] == b'.')
}

impl NetworkRule {
    fn options_allow(&self, target: &MatchTarget) -> bool {
        let o = &self.options;
        if o.third_party.is_some_and(|tp| tp != target.third_party) {
            return false;
        }
        if !o.include_domains.is_empty()
            && !o
                .include_domains
                .iter()
                .any(|d| domain_matches(&target.page_host, d))
        {
            return false;
        }
        !o.exclude_domains
            .iter()
            .any(|d| domain_matches(&target.page_host, d))
    }

    pub fn matches(&self, target: &MatchTarget) -> bool {
        if !self.options_allow(target) {
            return false;
        }
        let input = target.url.as_bytes();
        let starts: Vec<usize> = match self.anchor {
            Anchor::Plain => (0..=input.len()).collect(),
            Anchor::StartAnchor => vec![0],
            Anchor::DomainAnchor => domain_anchor_starts(&target.url, target.host_span),
        };
        pattern_matches(&self.tokens, input, &starts, self.end_anchor)
    }
}

impl FilterList {
    pub fn parse(text: &str, source_name: impl Into<String>) -> Self {
        let mut rules = Vec::new();
        let mut skipped = SkipTally::default();
        for line in text.lines() {
            match classify_line(line) {
                LineKind::Rule(r) => rules.push(r),
                LineKind::Blank => skipped.blank += 1,
                LineKind::Comment => skipped.comment += 1,
                LineKind::ElementHiding => skipped.element_hiding += 1,
                LineKind::Regex => skipped.regex += 1,
                LineKind::UnsupportedOption => skipped.unsupported_option += 1,
                LineKind::Invalid => skipped.invalid += 1,
            }
        }
        FilterList {
            source_name: source_name.into(),
            rules,
            skipped,
        }
    }

    /// Merges several lists into one, keeping each list's rule order.
    pub fn combine(lists: impl IntoIterator<Item = FilterList>) -> Self {
        let mut names = Vec::new();
        let mut rules = Vec::new();
        let mut skipped = SkipTally::default();
        for l in lists {
            names.push(l.source_name);
            rules.extend(l.rules);
            skipped.blank += l.skipped.blank;
            skipped.comment += l.skipped.comment;
            skipped.element_hiding += l.skipped.element_hiding;
            skipped.regex += l.skipped.regex;
            skipped.unsupported_option += l.skipped.unsupported_option;
            skipped.invalid += l.skipped.invalid;
        }
        FilterList {
            source_name: names.join("+"),
            rules,
            skipped,
        }
    }

    /// A URL is blocked when some blocking rule matches and no exception
    /// rule does.
    pub fn match_target(&self, target: &MatchTarget) -> MatchResult<'_> {
        let mut block = None;
        let mut exception = None;
        for rule in &self.rules {
            if rule.exception {
                if exception.is_none() && rule.matches(target) {
                    exception = Some(rule);
                }
            } else if block.is_none() && rule.matches(target) {
                block = Some(rule);
            }
            if block.is_some() && exception.is_some() {
                break;
            }
        }
        match (block, exception) {
            (Some(b), None) => MatchResult {
                blocked: true,
                rule: Some(b),
            },
            (Some(_), Some(e)) => MatchResult {
                blocked: false,
                rule: Some(e),
            },
            (None, _) => MatchResult {
                blocked: false,
                rule: None,
            },
        }
    }

    pub fn match_url(
        &self,
        url: &Url,
        page_origin: &str,
        suffixes: &SuffixList,
    ) -> MatchResult<'_> {
        self.match_target(&MatchTarget::new(url, page_origin, suffixes))
    }
}

pub fn parse_filter_list(text: &str) -> FilterList {
    FilterList::parse(text, "inline")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psl() -> &'static SuffixList {
        SuffixList::bundled()
    }

    fn blocked(list: &str, url: &str, page: &str) -> bool {
        FilterList::parse(list, "t")
            .match_url(&Url::parse(url).unwrap(), page, psl())
            .blocked
    }

    #[test]
    fn parses_domain_anchor() {
        let l = parse_filter_list("||doubleclick.net^");
        assert_eq!(l.rules.len(), 1);
        assert_eq!(l.rules[0].anchor, Anchor::DomainAnchor);
        assert_eq!(l.rules[0].pattern, "doubleclick.net^");
    }

    #[test]
    fn element_hiding_is_skipped() {
        let l = parse_filter_list("###ad-banner");
        assert!(l.rules.is_empty());
        assert_eq!(l.skipped.element_hiding, 1);
    }

    #[test]
    fn skip_categories() {
        let l = parse_filter_list(
            "[Adblock Plus 2.0]\n! comment\n\n/banner[0-9]+/\n||x.com^$script\n@@||ok.com^$domain=a.com|~b.a.com\n|https://exact.com/|\nexample.com##.ad\n$third-party\n",
        );
        assert_eq!(l.rules.len(), 2);
        assert!(l.rules[0].exception);
        assert_eq!(l.rules[0].options.include_domains, ["a.com"]);
        assert_eq!(l.rules[0].options.exclude_domains, ["b.a.com"]);
        assert!(l.rules[1].is_exact());
        assert_eq!(
            l.skipped,
            SkipTally {
                blank: 1,
                comment: 2,
                element_hiding: 1,
                regex: 1,
                unsupported_option: 1,
                invalid: 1
            }
        );
    }

    #[test]
    fn canonical_match() {
        assert!(blocked(
            "||doubleclick.net^",
            "https://ad.doubleclick.net/x",
            "https://example.com"
        ));
        assert!(blocked(
            "||doubleclick.net^",
            "https://doubleclick.net",
            "https://example.com"
        ));
        assert!(!blocked(
            "||doubleclick.net^",
            "https://notdoubleclick.net/",
            "https://example.com"
        ));
        assert!(!blocked(
            "||doubleclick.net^",
            "https://doubleclick.network/",
            "https://example.com"
        ));
    }

    #[test]
    fn third_party_option_exempts_first_party() {
        let rule = "||doubleclick.net^$third-party";
        assert!(!blocked(
            rule,
            "https://ad.doubleclick.net/x",
            "https://doubleclick.net"
        ));
        assert!(blocked(
            rule,
            "https://ad.doubleclick.net/x",
            "https://example.com"
        ));
        assert!(blocked(
            "||doubleclick.net^$~third-party",
            "https://ad.doubleclick.net/x",
            "https://www.doubleclick.net"
        ));
    }

    #[test]
    fn exception_overrides() {
        let list = "||tracker.com^\n@@||tracker.com/allowed^";
        assert!(blocked(list, "https://tracker.com/pixel", "https://a.com"));
        let l = FilterList::parse(list, "t");
        let r = l.match_url(
            &Url::parse("https://tracker.com/allowed?x").unwrap(),
            "https://a.com",
            psl(),
        );
        assert!(!r.blocked);
        assert!(r.rule.unwrap().exception);
    }

    #[test]
    fn separator_and_wildcards() {
        assert!(blocked(
            "/ads/*.gif^",
            "https://a.com/ads/x/y.gif?1",
            "https://a.com"
        ));
        assert!(blocked("/pixel^", "https://a.com/pixel", "https://a.com"));
        assert!(!blocked("/pixel^", "https://a.com/pixels", "https://a.com"));
        assert!(blocked(
            "|https://a.com/|",
            "https://a.com/",
            "https://a.com"
        ));
        assert!(!blocked(
            "|https://a.com/|",
            "https://a.com/x",
            "https://a.com"
        ));
        assert!(blocked("swf|", "https://a.com/movie.swf", "https://a.com"));
    }

    #[test]
    fn domain_option() {
        let rule = "/track.js$domain=news.com|~sports.news.com";
        assert!(blocked(
            rule,
            "https://cdn.x.com/track.js",
            "https://www.news.com"
        ));
        assert!(!blocked(
            rule,
            "https://cdn.x.com/track.js",
            "https://sports.news.com"
        ));
        assert!(!blocked(
            rule,
            "https://cdn.x.com/track.js",
            "https://other.com"
        ));
    }
}
