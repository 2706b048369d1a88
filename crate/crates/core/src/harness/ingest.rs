//! Dataset discovery and validation.
//!
//! The default layout under a root directory is
//!
//! ```text
//! images/<key>.png  gt/<key>.png  edges/<key>.png  saliency/<method>/<key>.png
//! ```
//!
//! A JSON manifest may override any of these directories.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SeeError};
use crate::io::image_dims;

/// Paths binding one image to its ground truth, edges and saliency maps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub key: String,
    pub image_path: PathBuf,
    pub gt_path: PathBuf,
    pub edge_path: PathBuf,
    pub saliency_paths: BTreeMap<String, PathBuf>,
}

/// Directory overrides, relative to the dataset root unless absolute.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub images: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub saliency_root: Option<PathBuf>,
    pub saliency: BTreeMap<String, PathBuf>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(SeeError::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| SeeError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Resolved directories of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub images: PathBuf,
    pub gt: PathBuf,
    pub edges: PathBuf,
    pub saliency_root: PathBuf,
    pub saliency: BTreeMap<String, PathBuf>,
}

impl Layout {
    pub fn standard(root: &Path) -> Self {
        Self {
            images: root.join("images"),
            gt: root.join("gt"),
            edges: root.join("edges"),
            saliency_root: root.join("saliency"),
            saliency: BTreeMap::new(),
        }
    }

    pub fn with_manifest(root: &Path, manifest: &Manifest) -> Self {
        let resolve = |p: &Option<PathBuf>, default: PathBuf| p.as_ref().map_or(default, |p| root.join(p));
        let base = Self::standard(root);
        Self {
            images: resolve(&manifest.images, base.images),
            gt: resolve(&manifest.gt, base.gt),
            edges: resolve(&manifest.edges, base.edges),
            saliency_root: resolve(&manifest.saliency_root, base.saliency_root),
            saliency: manifest.saliency.iter().map(|(m, p)| (m.clone(), root.join(p))).collect(),
        }
    }

    pub fn image_path(&self, key: &str) -> PathBuf {
        self.images.join(format!("{key}.png"))
    }

    pub fn gt_path(&self, key: &str) -> PathBuf {
        self.gt.join(format!("{key}.png"))
    }

    pub fn edge_path(&self, key: &str) -> PathBuf {
        self.edges.join(format!("{key}.png"))
    }

    pub fn method_dir(&self, method: &str) -> PathBuf {
        self.saliency
            .get(method)
            .cloned()
            .unwrap_or_else(|| self.saliency_root.join(method))
    }

    pub fn saliency_path(&self, method: &str, key: &str) -> PathBuf {
        self.method_dir(method).join(format!("{key}.png"))
    }

    /// Methods named in the manifest plus subdirectories of the saliency root, sorted.
    pub fn methods(&self) -> Result<Vec<String>> {
        let mut methods: Vec<String> = self.saliency.keys().cloned().collect();
        if self.saliency_root.is_dir() {
            let entries = std::fs::read_dir(&self.saliency_root).map_err(|e| SeeError::io(&self.saliency_root, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| SeeError::io(&self.saliency_root, e))?;
                if entry.path().is_dir() {
                    if let Some(name) = entry.file_name().to_str() {
                        methods.push(name.to_owned());
                    }
                }
            }
        }
        methods.sort();
        methods.dedup();
        Ok(methods)
    }
}

/// A key left out of the dataset and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedKey {
    pub key: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ingested {
    pub records: Vec<DatasetRecord>,
    pub skipped: Vec<SkippedKey>,
    pub methods: Vec<String>,
}

fn png_keys(dir: &Path) -> Result<Vec<String>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut keys = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| SeeError::io(dir, e))? {
        let path = entry.map_err(|e| SeeError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                keys.push(stem.to_owned());
            }
        }
    }
    keys.sort();
    Ok(keys)
}

fn check_record(record: &DatasetRecord) -> std::result::Result<(), String> {
    let dims = image_dims(&record.image_path).map_err(|e| e.to_string())?;
    let mut others = vec![("ground truth", &record.gt_path), ("edge map", &record.edge_path)];
    others.extend(record.saliency_paths.values().map(|p| ("saliency map", p)));
    for (role, path) in others {
        let d = image_dims(path).map_err(|e| format!("{role}: {e}"))?;
        if d != dims {
            return Err(format!(
                "{role} {} is {}x{}, image is {}x{}",
                path.display(),
                d.0,
                d.1,
                dims.0,
                dims.1
            ));
        }
    }
    Ok(())
}

/// Discovers and validates every key under `root`. Keys come from the images
/// directory and are sorted. Incomplete keys abort the ingestion unless
/// `skip_incomplete` is set, in which case they are listed in `skipped`.
pub fn ingest(root: &Path, manifest: Option<&Path>, skip_incomplete: bool) -> Result<Ingested> {
    ingest_methods(root, manifest, None, skip_incomplete)
}

/// Like [`ingest`], but only the listed methods are required and validated.
/// Listed methods without a directory are accepted and left out of the records,
/// so that built-in providers can be named alongside stored maps.
pub fn ingest_methods(
    root: &Path,
    manifest: Option<&Path>,
    wanted: Option<&[String]>,
    skip_incomplete: bool,
) -> Result<Ingested> {
    let layout = match manifest {
        Some(m) => Layout::with_manifest(root, &Manifest::load(m)?),
        None => Layout::standard(root),
    };
    let mut methods = layout.methods()?;
    if let Some(wanted) = wanted {
        methods.retain(|m| wanted.contains(m));
    }
    let keys = png_keys(&layout.images)?;
    if keys.is_empty() {
        log::warn!("no images found under {}", layout.images.display());
    }

    let mut out = Ingested {
        methods: methods.clone(),
        ..Ingested::default()
    };
    for key in keys {
        let record = DatasetRecord {
            image_path: layout.image_path(&key),
            gt_path: layout.gt_path(&key),
            edge_path: layout.edge_path(&key),
            saliency_paths: methods.iter().map(|m| (m.clone(), layout.saliency_path(m, &key))).collect(),
            key,
        };
        match check_record(&record) {
            Ok(()) => out.records.push(record),
            Err(reason) => out.skipped.push(SkippedKey {
                key: record.key,
                reason,
            }),
        }
    }
    if !skip_incomplete && !out.skipped.is_empty() {
        let detail: Vec<String> = out.skipped.iter().map(|s| format!("{}: {}", s.key, s.reason)).collect();
        return Err(SeeError::Dataset(detail.join("; ")));
    }
    for s in &out.skipped {
        log::warn!("skipping {}: {}", s.key, s.reason);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::io::save_map;

    fn write_key(root: &Path, key: &str, parts: &[&str]) {
        for part in parts {
            save_map(&ScalarField::filled(4, 5, 0.5), root.join(part).join(format!("{key}.png"))).unwrap();
        }
    }

    const ALL: [&str; 4] = ["images", "gt", "edges", "saliency/m1"];

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let got = ingest(dir.path(), None, false).unwrap();
        assert!(got.records.is_empty() && got.skipped.is_empty());
    }

    #[test]
    fn skip_incomplete_reports_missing_gt() {
        let dir = tempfile::tempdir().unwrap();
        for key in ["c", "a", "b"] {
            write_key(dir.path(), key, &ALL);
        }
        write_key(dir.path(), "d", &["images", "edges", "saliency/m1"]);
        let got = ingest(dir.path(), None, true).unwrap();
        let keys: Vec<&str> = got.records.iter().map(|r| r.key.as_str()).collect();
        assert_eq!(keys, ["a", "b", "c"]);
        assert_eq!(got.skipped.len(), 1);
        assert_eq!(got.skipped[0].key, "d");
        assert_eq!(got.methods, ["m1"]);
        assert!(matches!(ingest(dir.path(), None, false), Err(SeeError::Dataset(_))));
    }

    #[test]
    fn dimension_mismatch_is_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        write_key(dir.path(), "a", &ALL);
        save_map(&ScalarField::zeros(3, 3), dir.path().join("edges/a.png")).unwrap();
        assert!(ingest(dir.path(), None, false).is_err());
        assert_eq!(ingest(dir.path(), None, true).unwrap().skipped.len(), 1);
    }

    #[test]
    fn manifest_overrides_edges() {
        let dir = tempfile::tempdir().unwrap();
        write_key(dir.path(), "a", &ALL);
        write_key(dir.path(), "a", &["alt_edges"]);
        let manifest = dir.path().join("manifest.json");
        std::fs::write(&manifest, r#"{"edges": "alt_edges"}"#).unwrap();
        let got = ingest(dir.path(), Some(&manifest), false).unwrap();
        assert_eq!(got.records[0].edge_path, dir.path().join("alt_edges/a.png"));
    }

    #[test]
    fn method_filter_ignores_other_methods() {
        let dir = tempfile::tempdir().unwrap();
        write_key(dir.path(), "a", &ALL);
        save_map(&ScalarField::zeros(3, 3), dir.path().join("saliency/m2/a.png")).unwrap();
        assert!(ingest(dir.path(), None, false).is_err());
        let wanted = ["m1".to_owned(), "luma-mean".to_owned()];
        let got = ingest_methods(dir.path(), None, Some(&wanted), false).unwrap();
        assert_eq!(got.methods, ["m1"]);
        assert_eq!(got.records.len(), 1);
    }
}
