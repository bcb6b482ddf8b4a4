use std::fs::{self, File};
use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use super::{
    BundleError, Members, WebBundle, GRAPH_MEMBER, HAR_MEMBER, MANIFEST_MEMBER, MEMBER_NAMES,
    SCREENSHOT_MEMBER,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberSummary {
    pub name: &'static str,
    pub stored_name: String,
    pub bytes: u64,
    pub stored_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BundleSummary {
    pub members: Vec<MemberSummary>,
    pub compressed: bool,
    pub nodes: usize,
    pub edges: usize,
    pub har_entries: usize,
}

fn gunzip(bytes: &[u8]) -> Result<Vec<u8>, BundleError> {
    let mut out = Vec::new();
    GzDecoder::new(bytes).read_to_end(&mut out)?;
    Ok(out)
}

fn gzip(bytes: &[u8]) -> Vec<u8> {
    // flate2's default header carries no name and a zero mtime.
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(bytes).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

fn read_dir_member(dir: &Path, name: &str) -> Result<Option<Vec<u8>>, BundleError> {
    let plain = dir.join(name);
    if plain.is_file() {
        return Ok(Some(fs::read(plain)?));
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        return Ok(Some(gunzip(&fs::read(gz)?)?));
    }
    Ok(None)
}

fn read_zip_member<R: Read + Seek>(
    zip: &mut ZipArchive<R>,
    name: &str,
) -> Result<Option<Vec<u8>>, BundleError> {
    let container = |e: zip::result::ZipError| BundleError::Container(e.to_string());
    for (stored, compressed) in [(name.to_string(), false), (format!("{name}.gz"), true)] {
        let mut file = match zip.by_name(&stored) {
            Ok(f) => f,
            Err(zip::result::ZipError::FileNotFound) => continue,
            Err(e) => return Err(container(e)),
        };
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        return Ok(Some(if compressed { gunzip(&bytes)? } else { bytes }));
    }
    Ok(None)
}

/// Reads raw member bytes from a container file or bundle directory. The
/// screenshot may be absent; every other member is required.
pub fn read_members(path: &Path) -> Result<Members, BundleError> {
    let mut found: Vec<Option<Vec<u8>>> = Vec::with_capacity(4);
    if path.is_dir() {
        for name in MEMBER_NAMES {
            found.push(read_dir_member(path, name)?);
        }
    } else {
        let mut zip = ZipArchive::new(File::open(path)?)
            .map_err(|e| BundleError::Container(e.to_string()))?;
        for name in MEMBER_NAMES {
            found.push(read_zip_member(&mut zip, name)?);
        }
    }
    let mut it = found.into_iter();
    let mut required = |name: &str| {
        it.next()
            .flatten()
            .ok_or_else(|| BundleError::MissingMember(name.to_string()))
    };
    let manifest = required(MANIFEST_MEMBER)?;
    let har = required(HAR_MEMBER)?;
    let graph = required(GRAPH_MEMBER)?;
    let screenshot = it.next().flatten();
    Ok(Members {
        manifest,
        har,
        graph,
        screenshot,
    })
}

fn zip_members(
    members: &Members,
    compress: bool,
) -> Result<(Vec<u8>, Vec<MemberSummary>), BundleError> {
    let container = |e: zip::result::ZipError| BundleError::Container(e.to_string());
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default());
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let mut summaries = Vec::new();
    let entries: [(&'static str, Option<&Vec<u8>>); 4] = [
        (MANIFEST_MEMBER, Some(&members.manifest)),
        (HAR_MEMBER, Some(&members.har)),
        (GRAPH_MEMBER, Some(&members.graph)),
        (SCREENSHOT_MEMBER, members.screenshot.as_ref()),
    ];
    for (name, bytes) in entries {
        let Some(bytes) = bytes else { continue };
        let (stored_name, stored) = if compress {
            (format!("{name}.gz"), gzip(bytes))
        } else {
            (name.to_string(), bytes.clone())
        };
        zip.start_file(stored_name.as_str(), options)
            .map_err(container)?;
        zip.write_all(&stored)?;
        summaries.push(MemberSummary {
            name,
            stored_name,
            bytes: bytes.len() as u64,
            stored_bytes: stored.len() as u64,
        });
    }
    let out = zip.finish().map_err(container)?.into_inner();
    Ok((out, summaries))
}

fn summarize(bundle: &WebBundle, members: Vec<MemberSummary>, compressed: bool) -> BundleSummary {
    BundleSummary {
        members,
        compressed,
        nodes: bundle.graph.nodes().len(),
        edges: bundle.graph.edges().len(),
        har_entries: bundle.har.entries.len(),
    }
}

/// Packs an unpacked bundle directory into a single `.web` container.
///
/// All four members must be present and parse. Member bytes are stored
/// verbatim, gzip-compressed per member when `compress` is set.
pub fn pack_bundle(dir: &Path, out: &Path, compress: bool) -> Result<BundleSummary, BundleError> {
    let mut members = Vec::with_capacity(4);
    for name in MEMBER_NAMES {
        members.push(
            read_dir_member(dir, name)?.ok_or_else(|| BundleError::MissingMember(name.into()))?,
        );
    }
    let mut it = members.into_iter();
    let members = Members {
        manifest: it.next().unwrap(),
        har: it.next().unwrap(),
        graph: it.next().unwrap(),
        screenshot: it.next(),
    };
    let bundle = members.parse()?;
    let (bytes, summaries) = zip_members(&members, compress)?;
    fs::write(out, bytes)?;
    Ok(summarize(&bundle, summaries, compress))
}

/// Serializes an in-memory bundle into a `.web` container.
pub fn write_bundle(
    bundle: &WebBundle,
    out: &Path,
    compress: bool,
) -> Result<BundleSummary, BundleError> {
    let (bytes, summaries) = zip_members(&bundle.to_members(), compress)?;
    fs::write(out, bytes)?;
    Ok(summarize(bundle, summaries, compress))
}

/// Writes an in-memory bundle as an unpacked directory.
pub fn write_bundle_dir(bundle: &WebBundle, dir: &Path) -> Result<(), BundleError> {
    write_members_dir(&bundle.to_members(), dir)
}

fn write_members_dir(members: &Members, dir: &Path) -> Result<(), BundleError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MANIFEST_MEMBER), &members.manifest)?;
    fs::write(dir.join(HAR_MEMBER), &members.har)?;
    fs::write(dir.join(GRAPH_MEMBER), &members.graph)?;
    if let Some(png) = &members.screenshot {
        fs::write(dir.join(SCREENSHOT_MEMBER), png)?;
    }
    Ok(())
}

/// Extracts a container's members, decompressed, into `dir`.
pub fn unpack_bundle(container: &Path, dir: &Path) -> Result<(), BundleError> {
    write_members_dir(&read_members(container)?, dir)
}
