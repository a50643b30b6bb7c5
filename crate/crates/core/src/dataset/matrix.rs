use std::path::Path;

use super::{load_image, DatasetManifest};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::{
    extract_features, FeatureConfig, FeatureVector, FEATURE_COUNT, FEATURE_NAMES,
};
use crate::forest::{Dataset, Label};
use crate::raster::RasterImage;
use crate::segmentation::{segment_cell, split_outcomes, EntryFailure, SegmentationConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub source_id: String,
    pub values: FeatureVector,
    pub label: Label,
}

/// One row per successfully processed sample, columns in the fixed order of
/// [`FEATURE_NAMES`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn column_names() -> &'static [&'static str; FEATURE_COUNT] {
        &FEATURE_NAMES
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        let values = self.rows.iter().flat_map(|r| r.values.0).collect();
        Dataset::new(FEATURE_COUNT, values, self.labels())
    }

    pub fn header() -> Vec<&'static str> {
        let mut h = vec!["source_id"];
        h.extend(FEATURE_NAMES);
        h.push("label");
        h
    }

    /// Values are written in Rust's shortest round-trip form, so loading
    /// reproduces them bit for bit.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(Self::header())?;
        for row in &self.rows {
            let mut rec = vec![row.source_id.clone()];
            rec.extend(row.values.0.iter().map(f64::to_string));
            rec.push(row.label.as_str().to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != Self::header() {
            return Err(Error::Schema(format!(
                "{}: columns do not match the feature schema",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut values = [0.0; FEATURE_COUNT];
            for (j, v) in values.iter_mut().enumerate() {
                *v = rec[j + 1].parse().map_err(|_| {
                    Error::Schema(format!(
                        "{}: row {}: bad value {:?}",
                        path.display(),
                        i + 1,
                        &rec[j + 1]
                    ))
                })?;
            }
            rows.push(FeatureRow {
                source_id: rec[0].to_string(),
                values: FeatureVector::new(values)?,
                label: rec[FEATURE_COUNT + 1].parse()?,
            });
        }
        Ok(FeatureMatrix { rows })
    }
}

/// Segment one image and compute its 24 features.
pub fn extract_entry(
    img: &RasterImage,
    seg: &SegmentationConfig,
    feat: &FeatureConfig,
) -> Result<FeatureVector> {
    let mask = segment_cell(img, seg, false)?.mask;
    extract_features(img, &mask, feat)
}

/// Runs segmentation and feature extraction over a manifest. Entries that
/// fail at any stage are excluded and reported.
pub fn extract_all(
    manifest: &DatasetManifest,
    seg: &SegmentationConfig,
    feat: &FeatureConfig,
    exec: Execution,
) -> (FeatureMatrix, Vec<EntryFailure>) {
    let outcomes = exec.map_slice(&manifest.entries, |entry| {
        load_image(&manifest.resolve(&entry.path)).and_then(|img| extract_entry(&img, seg, feat))
    });
    let (ok, failed) = split_outcomes(manifest, outcomes);
    let rows = ok
        .into_iter()
        .map(|(i, values)| FeatureRow {
            source_id: manifest.entries[i].path.to_string_lossy().into_owned(),
            values,
            label: manifest.entries[i].label,
        })
        .collect();
    (FeatureMatrix { rows }, failed)
}
