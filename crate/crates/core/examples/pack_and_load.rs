//! Write a bundle as a directory, pack it with and without compression,
//! and load every form back.

use webbundle::bundle::{pack_bundle, unpack_bundle, write_bundle_dir};
use webbundle::load_bundle;
use webbundle::synth::{generate_scenario, scenario_to_bundle, Size};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = std::env::temp_dir().join(format!("webbundle-pack-{}", std::process::id()));
    let dir = tmp.join("page");
    std::fs::create_dir_all(&dir)?;

    let synth = scenario_to_bundle(&generate_scenario(3, Size::Small))?;
    write_bundle_dir(&synth.bundle, &dir)?;

    for compress in [false, true] {
        let out = tmp.join(format!("page{}.web", if compress { ".gz" } else { "" }));
        let summary = pack_bundle(&dir, &out, compress)?;
        for m in &summary.members {
            println!(
                "{:<14} {:>7} bytes, stored as {} ({} bytes)",
                m.name, m.bytes, m.stored_name, m.stored_bytes
            );
        }
        let loaded = load_bundle(&out)?;
        assert_eq!(loaded, load_bundle(&dir)?);

        let back = tmp.join(format!("unpacked-{compress}"));
        unpack_bundle(&out, &back)?;
        println!(
            "compress={compress}: {} nodes, {} edges, {} HAR entries",
            summary.nodes, summary.edges, summary.har_entries
        );
    }
    std::fs::remove_dir_all(&tmp)?;
    Ok(())
}
