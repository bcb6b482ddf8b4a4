use std::net::{Ipv4Addr, Ipv6Addr};
use std::path::Path;
use std::sync::OnceLock;

use publicsuffix::{List, Psl};
use serde::Serialize;

use super::TrackerError;

pub const BUNDLED_SNAPSHOT_NAME: &str = "public_suffix_list.2026-10-14.dat";
const BUNDLED_SNAPSHOT: &str = include_str!("../../data/public_suffix_list.2026-10-14.dat");

/// A public-suffix snapshot.
#[derive(Debug, Clone)]
pub struct SuffixList {
    list: List,
    source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistrableDomain {
    pub domain: String,
    /// Set when the host is itself a public suffix (or an IP literal) and
    /// was returned verbatim.
    pub verbatim: bool,
}

impl SuffixList {
    pub fn parse(text: &str, source: impl Into<String>) -> Result<Self, TrackerError> {
        let list = text
            .parse::<List>()
            .map_err(|e| TrackerError::SuffixData(e.to_string()))?;
        Ok(SuffixList {
            list,
            source: source.into(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, TrackerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrackerError::SuffixData(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.display().to_string())
    }

    /// The snapshot vendored with this crate, parsed once.
    pub fn bundled() -> &'static SuffixList {
        static LIST: OnceLock<SuffixList> = OnceLock::new();
        LIST.get_or_init(|| {
            SuffixList::parse(BUNDLED_SNAPSHOT, BUNDLED_SNAPSHOT_NAME)
                .expect("bundled suffix snapshot parses")
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn registrable_domain(&self, host: &str) -> Result<RegistrableDomain, TrackerError> {
        let host = host.trim().trim_end_matches('.').to_ascii_lowercase();
        if host.is_empty() {
            return Err(TrackerError::Input("empty host".into()));
        }
        let bare = host.trim_start_matches('[').trim_end_matches(']');
        if bare.parse::<Ipv4Addr>().is_ok() || bare.parse::<Ipv6Addr>().is_ok() {
            return Ok(RegistrableDomain {
                domain: host,
                verbatim: true,
            });
        }
        match self.list.domain(host.as_bytes()) {
            Some(d) => Ok(RegistrableDomain {
                domain: String::from_utf8_lossy(d.as_bytes()).into_owned(),
                verbatim: false,
            }),
            None => Ok(RegistrableDomain {
                domain: host,
                verbatim: true,
            }),
        }
    }

    /// Registrable domain as a plain string; hosts that cannot be cut are
    /// returned as given.
    pub fn site(&self, host: &str) -> String {
        self.registrable_domain(host)
            .map(|d| d.domain)
            .unwrap_or_else(|_| host.to_ascii_lowercase())
    }
}

pub fn registrable_domain(
    host: &str,
    suffixes: &SuffixList,
) -> Result<RegistrableDomain, TrackerError> {
    suffixes.registrable_domain(host)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rd(host: &str) -> String {
        SuffixList::bundled()
            .registrable_domain(host)
            .unwrap()
            .domain
    }

    #[test]
    fn examples() {
        assert_eq!(rd("www.googletagmanager.com"), "googletagmanager.com");
        assert_eq!(rd("127.0.0.1"), "127.0.0.1");
        assert_eq!(rd("foo.bar.co.uk"), "bar.co.uk");
        assert_eq!(rd("WWW.Example.COM."), "example.com");
        assert_eq!(rd("[::1]"), "[::1]");
    }

    #[test]
    fn public_suffix_is_verbatim_with_flag() {
        let d = SuffixList::bundled().registrable_domain("co.uk").unwrap();
        assert_eq!(d.domain, "co.uk");
        assert!(d.verbatim);
        assert!(
            !SuffixList::bundled()
                .registrable_domain("a.co.uk")
                .unwrap()
                .verbatim
        );
    }

    #[test]
    fn wildcard_and_exception_rules() {
        assert_eq!(rd("a.b.ck"), "a.b.ck");
        assert_eq!(rd("www.ck"), "www.ck");
        assert_eq!(rd("x.city.kawasaki.jp"), "city.kawasaki.jp");
    }

    #[test]
    fn empty_host_is_input_error() {
        assert!(matches!(
            SuffixList::bundled().registrable_domain(" "),
            Err(TrackerError::Input(_))
        ));
    }

    proptest! {
        #[test]
        fn idempotent(labels in prop::collection::vec("[a-z]{1,6}", 1..5),
                      tld in prop::sample::select(vec!["com", "co.uk", "org", "de", "github.io", "jp", "zz"])) {
            let host = format!("{}.{}", labels.join("."), tld);
            let once = rd(&host);
            prop_assert_eq!(rd(&once), once.clone());
        }
    }
}
