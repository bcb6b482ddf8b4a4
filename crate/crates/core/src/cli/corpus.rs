use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundle::{load_bundle, origin_of, BundleError, WebBundle};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub page_origin: String,
}

/// A list of bundles to process as one corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub bundles: Vec<CorpusEntry>,
    #[serde(default)]
    pub notes: String,
    #[serde(skip)]
    base: PathBuf,
}

impl CorpusManifest {
    pub fn new(bundles: Vec<CorpusEntry>, notes: impl Into<String>) -> Self {
        CorpusManifest {
            bundles,
            notes: notes.into(),
            base: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut manifest: CorpusManifest =
            serde_json::from_slice(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        manifest.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for b in &manifest.bundles {
            if origin_of(&b.page_origin).is_none() {
                return Err(format!(
                    "corpus entry {}: bad page origin `{}`",
                    b.path.display(),
                    b.page_origin
                ));
            }
        }
        Ok(manifest)
    }

    pub fn resolve(&self, entry: &CorpusEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base.join(&entry.path)
        }
    }

    /// Loads bundles lazily, one at a time, in manifest order.
    pub fn bundles(
        &self,
    ) -> impl Iterator<Item = (&CorpusEntry, Result<WebBundle, BundleError>)> + '_ {
        self.bundles
            .iter()
            .map(|e| (e, load_bundle(self.resolve(e))))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("corpus manifest serializes");
        out.push(b'\n');
        out
    }
}
