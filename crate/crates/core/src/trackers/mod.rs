//! Filter lists, registrable domains, and third-party prevalence.

mod filter;
mod prevalence;
mod suffix;

use thiserror::Error;

pub use filter::{
    is_separator, parse_filter_list, Anchor, FilterList, MatchResult, MatchTarget, NetworkRule,
    RuleOptions, SkipTally, Token,
};
pub use prevalence::{
    third_party_prevalence, PrevalenceAccumulator, RequestSource, ThirdPartyStat,
    DEFAULT_MIN_FIRST_PARTIES,
};
pub use suffix::{registrable_domain, RegistrableDomain, SuffixList, BUNDLED_SNAPSHOT_NAME};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrackerError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("bad public-suffix data: {0}")]
    SuffixData(String),
}
