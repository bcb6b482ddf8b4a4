//! Validate a bundle, then break it and validate again.
//!
//! cargo run --example validate [path/to/bundle.web]

use webbundle::bundle::read_members;
use webbundle::synth::{generate_scenario, scenario_to_bundle, Size};
use webbundle::validate_bundle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut bundle = match std::env::args_os().nth(1) {
        Some(path) => read_members(path.as_ref())?.parse()?,
        None => scenario_to_bundle(&generate_scenario(11, Size::Medium))?.bundle,
    };
    let report = validate_bundle(&bundle);
    println!("{} findings", report.findings.len());

    bundle.manifest.captured_at = "yesterday".into();
    if let Some(e) = bundle.har.entries.first_mut() {
        e.started_at = "not a time".into();
    }
    for f in validate_bundle(&bundle).findings {
        println!("{} {} {}: {}", f.severity, f.member, f.code, f.message);
    }
    Ok(())
}
