//! Single-cell extraction that runs unchanged on tissue backgrounds and on
//! pre-masked images with black backgrounds.
//!
//! Chain: black→yellow, CMYK, Y plane, 5x5 local max, contrast stretch and
//! histogram equalization of the filtered plane, `2s + e`, keep pixels below
//! `min + delta`, then the connected component closest to the image center.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_image, DatasetManifest};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::raster::{
    black_to_yellow, combine_stretch_equalize, connected_components, contrast_stretch,
    equalize_histogram, local_max_filter, rgb_to_cmyk, select_center_object, threshold_below,
    BinaryMask, ColorSpace, Connectivity, RasterImage,
};

pub const MIN_DIMENSION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub threshold_delta: f64,
    pub max_window: usize,
    pub stretch_low: f64,
    pub stretch_high: f64,
    #[serde(skip)]
    pub connectivity: Connectivity,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            threshold_delta: 0.01,
            max_window: 5,
            stretch_low: 2.0,
            stretch_high: 98.0,
            connectivity: Connectivity::Eight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub mask: BinaryMask,
    pub cell_pixel_count: usize,
    /// Selected region centroid to image center, in pixels.
    pub center_distance: f64,
    /// Named intermediate images, only filled when tracing was requested.
    pub trace: Vec<(String, RasterImage)>,
}

pub fn segment_cell(
    img: &RasterImage,
    cfg: &SegmentationConfig,
    trace: bool,
) -> Result<SegmentationResult> {
    img.expect(ColorSpace::Rgb)?;
    if img.width() < MIN_DIMENSION || img.height() < MIN_DIMENSION {
        return Err(Error::InvalidImage(format!(
            "{}x{} is below the {MIN_DIMENSION}px minimum",
            img.width(),
            img.height()
        )));
    }
    let mut stages = Vec::new();
    let mut keep = |name: &str, im: &RasterImage| {
        if trace {
            stages.push((name.to_string(), im.clone()));
        }
    };

    let remapped = black_to_yellow(img)?;
    keep("yellowed", &remapped);
    let yellow = rgb_to_cmyk(&remapped)?.plane_image(2);
    keep("yellow", &yellow);
    let filtered = local_max_filter(&yellow, cfg.max_window)?;
    keep("filtered", &filtered);
    let stretched = contrast_stretch(&filtered, cfg.stretch_low, cfg.stretch_high)?;
    keep("stretched", &stretched);
    let equalized = equalize_histogram(&filtered)?;
    keep("equalized", &equalized);
    let combined = combine_stretch_equalize(&stretched, &equalized)?;
    keep("combined", &combined);
    let thresholded = threshold_below(&combined, cfg.threshold_delta)?;
    keep("thresholded", &thresholded.to_raster());

    let regions = connected_components(&thresholded, cfg.connectivity);
    let (mask, center_distance) = select_center_object(&regions)
        .map_err(|_| Error::SegmentationFailure("no object after thresholding".into()))?;
    keep("mask", &mask.to_raster());
    Ok(SegmentationResult {
        cell_pixel_count: mask.count(),
        mask,
        center_distance,
        trace: stages,
    })
}

#[derive(Debug, Clone)]
pub struct EntryFailure {
    pub index: usize,
    pub path: PathBuf,
    pub message: String,
}

/// Segments every manifest entry. Output order follows the manifest; failures
/// are collected instead of aborting the batch.
pub fn segment_batch(
    manifest: &DatasetManifest,
    cfg: &SegmentationConfig,
    exec: Execution,
) -> (Vec<(usize, SegmentationResult)>, Vec<EntryFailure>) {
    let outcomes = exec.map_slice(&manifest.entries, |entry| {
        let path = manifest.resolve(&entry.path);
        load_image(&path).and_then(|img| segment_cell(&img, cfg, false))
    });
    split_outcomes(manifest, outcomes)
}

pub(crate) fn split_outcomes<T>(
    manifest: &DatasetManifest,
    outcomes: Vec<Result<T>>,
) -> (Vec<(usize, T)>, Vec<EntryFailure>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => ok.push((index, v)),
            Err(e) => failed.push(EntryFailure {
                index,
                path: manifest.entries[index].path.clone(),
                message: e.to_string(),
            }),
        }
    }
    (ok, failed)
}

/// Convenience for the CLI: load and segment a single file.
pub fn segment_file(
    path: &Path,
    cfg: &SegmentationConfig,
    trace: bool,
) -> Result<SegmentationResult> {
    segment_cell(&load_image(path)?, cfg, trace)
}
