//! Analyses over one execution graph: API appearances, event-handler
//! provenance, and request extraction with initiator attribution.

mod appearances;
mod handlers;
mod requests;

pub use appearances::{
    compare_appearances, count_api_appearances, from_set, to_set, ApiFilter, Appearance,
    AppearanceComparison, AppearanceDelta, AppearanceSet, DeltaClass, DeltaSummary,
    CHANNEL_MESSAGING_APIS, CSS_OM_APIS,
};
pub use handlers::{
    detect_inline_event_handlers, origin_is_affected, Adder, HandlerClass, HandlerCorpusSummary,
    HandlerFinding, ProvenanceError,
};
pub use requests::{
    attribute_requests, extract_requests, AttributedRequest, Attribution, AttributionGroup,
    AttributionTable, AttributionWarning, Party, RequestContext, RequestRef,
};
