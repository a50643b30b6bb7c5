use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::IMAGE_EXTENSIONS;
use crate::error::{Error, Result};
use crate::forest::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "ALL_IDB2")]
    AllIdb2,
    #[serde(rename = "C_NMC")]
    CNmc,
    #[serde(rename = "PHANTOM")]
    Phantom,
    #[serde(rename = "OTHER")]
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest root unless absolute.
    pub path: PathBuf,
    pub label: Label,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    path: String,
    label: String,
    source: Source,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(&e.path) {
                return Err(Error::Schema(format!(
                    "duplicate manifest path {}",
                    e.path.display()
                )));
            }
        }
        Ok(DatasetManifest {
            root: root.into(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// Writes `path,label,source` rows. Paths are stored as given.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(Record {
                path: e.path.to_string_lossy().into_owned(),
                label: e.label.as_str().into(),
                source: e.source,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest; relative entries resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<_> = r.headers()?.iter().map(str::to_string).collect();
        if header != ["path", "label", "source"] {
            return Err(Error::Schema(format!(
                "{}: unexpected manifest header {header:?}",
                path.display()
            )));
        }
        let mut entries = Vec::new();
        for rec in r.deserialize() {
            let rec: Record = rec?;
            entries.push(ManifestEntry {
                path: rec.path.into(),
                label: rec.label.parse()?,
                source: rec.source,
            });
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        DatasetManifest::new(root, entries)
    }
}

/// How labels are read off a directory tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutRule {
    /// File stem ends in `_1` (malignant) or `_0` (healthy), e.g. `Im001_1.tif`.
    SuffixDigit,
    /// Some ancestor directory is named `all` (malignant) or `hem` (healthy).
    ClassFolders,
}

impl LayoutRule {
    fn label(self, rel: &Path) -> Option<Label> {
        match self {
            LayoutRule::SuffixDigit => {
                let stem = rel.file_stem()?.to_str()?;
                let (_, tail) = stem.rsplit_once('_')?;
                match tail {
                    "0" => Some(Label::Healthy),
                    "1" => Some(Label::Malignant),
                    _ => None,
                }
            }
            LayoutRule::ClassFolders => rel.parent()?.components().rev().find_map(|c| {
                match c.as_os_str().to_str()?.to_ascii_lowercase().as_str() {
                    "all" => Some(Label::Malignant),
                    "hem" => Some(Label::Healthy),
                    _ => None,
                }
            }),
        }
    }

    fn source(self) -> Source {
        match self {
            LayoutRule::SuffixDigit => Source::AllIdb2,
            LayoutRule::ClassFolders => Source::CNmc,
        }
    }
}

impl std::str::FromStr for LayoutRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suffix-digit" | "all-idb2" => Ok(LayoutRule::SuffixDigit),
            "class-folders" | "c-nmc" => Ok(LayoutRule::ClassFolders),
            _ => Err(Error::InvalidParameter(format!(
                "unknown layout rule {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Scans `root` for image files and labels them by `rule`. Entries are in
/// lexicographic path order; files the rule cannot label are returned
/// separately.
pub fn build_manifest(
    root: &Path,
    rule: LayoutRule,
) -> Result<(DatasetManifest, Vec<SkippedFile>)> {
    if !fs::metadata(root).map_err(|e| Error::io(root, e))?.is_dir() {
        return Err(Error::InvalidParameter(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for item in WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(root)
            .unwrap_or(item.path())
            .to_path_buf();
        let is_image = rel
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if !is_image {
            skipped.push(SkippedFile {
                path: rel,
                reason: "not an image file".into(),
            });
            continue;
        }
        match rule.label(&rel) {
            Some(label) => entries.push(ManifestEntry {
                path: rel,
                label,
                source: rule.source(),
            }),
            None => skipped.push(SkippedFile {
                path: rel,
                reason: format!("no label under {rule:?}"),
            }),
        }
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok((DatasetManifest::new(root, entries)?, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(root: &Path, rel: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, b"x").unwrap();
    }

    #[test]
    fn suffix_rule() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "Im001_1.tif");
        let (m, skipped) = build_manifest(dir.path(), LayoutRule::SuffixDigit).unwrap();
        assert!(skipped.is_empty());
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].label, Label::Malignant);
        assert_eq!(m.entries[0].source, Source::AllIdb2);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let (m, skipped) = build_manifest(dir.path(), LayoutRule::SuffixDigit).unwrap();
        assert!(m.is_empty() && skipped.is_empty());
    }

    #[test]
    fn mixed_names_are_ordered_and_reported() {
        let dir = tempfile::tempdir().unwrap();
        for f in [
            "Im010_0.tif",
            "Im002_1.TIF",
            "notes.txt",
            "Im003.tif",
            "Im001_0.jpg",
        ] {
            touch(dir.path(), f);
        }
        let (m, skipped) = build_manifest(dir.path(), LayoutRule::SuffixDigit).unwrap();
        let names: Vec<_> = m.entries.iter().map(|e| e.path.to_str().unwrap()).collect();
        assert_eq!(names, ["Im001_0.jpg", "Im002_1.TIF", "Im010_0.tif"]);
        let skipped: Vec<_> = skipped.iter().map(|s| s.path.to_str().unwrap()).collect();
        assert_eq!(skipped, ["Im003.tif", "notes.txt"]);
    }

    #[test]
    fn folder_rule() {
        let dir = tempfile::tempdir().unwrap();
        for f in [
            "fold_0/all/a.bmp",
            "fold_0/hem/b.bmp",
            "fold_1/hem/c.bmp",
            "fold_1/other/d.bmp",
        ] {
            touch(dir.path(), f);
        }
        let (m, skipped) = build_manifest(dir.path(), LayoutRule::ClassFolders).unwrap();
        let labels: Vec<_> = m.entries.iter().map(|e| e.label).collect();
        assert_eq!(labels, [Label::Malignant, Label::Healthy, Label::Healthy]);
        assert_eq!(skipped.len(), 1);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DatasetManifest::new(
            dir.path(),
            vec![
                ManifestEntry {
                    path: "a/x.png".into(),
                    label: Label::Healthy,
                    source: Source::Phantom,
                },
                ManifestEntry {
                    path: "b,y.png".into(),
                    label: Label::Malignant,
                    source: Source::Other,
                },
            ],
        )
        .unwrap();
        let file = dir.path().join("manifest.csv");
        m.save(&file).unwrap();
        assert_eq!(DatasetManifest::load(&file).unwrap(), m);
    }

    #[test]
    fn duplicates_rejected() {
        let e = ManifestEntry {
            path: "a.png".into(),
            label: Label::Healthy,
            source: Source::Other,
        };
        assert!(DatasetManifest::new(".", vec![e.clone(), e]).is_err());
    }
}
