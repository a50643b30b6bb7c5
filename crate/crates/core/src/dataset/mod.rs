//! Image I/O, manifests, feature-matrix files and the synthetic phantom set.

mod manifest;
mod matrix;
mod phantom;

pub use manifest::{
    build_manifest, DatasetManifest, LayoutRule, ManifestEntry, SkippedFile, Source,
};
pub use matrix::{extract_all, extract_entry, FeatureMatrix, FeatureRow};
pub use phantom::{generate_phantoms, mask_path, render_phantom, Background, PhantomSpec, Recipe};

use std::path::Path;

use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ColorSpace, RasterImage};

pub const IMAGE_EXTENSIONS: [&str; 6] = ["bmp", "tif", "tiff", "jpg", "jpeg", "png"];

fn decode_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Decodes any supported file to 8-bit RGB. Grayscale input is promoted
/// with R = G = B.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let img = image::open(path)
        .map_err(|e| decode_error(path, e))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    RasterImage::from_rgb8(w as usize, h as usize, img.as_raw())
}

pub fn save_image(img: &RasterImage, path: &Path) -> Result<()> {
    img.expect(ColorSpace::Rgb)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let buf = RgbImage::from_raw(w, h, img.to_u8_interleaved())
        .ok_or_else(|| Error::InvalidImage("buffer size mismatch".into()))?;
    buf.save(path).map_err(|e| decode_error(path, e))
}

/// Saves a single-plane image (gray, binary, or one plane of anything else)
/// after clamping to 0–255.
pub fn save_plane(img: &RasterImage, plane: usize, path: &Path) -> Result<()> {
    let data = img
        .plane(plane)
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let buf = GrayImage::from_raw(img.width() as u32, img.height() as u32, data)
        .ok_or_else(|| Error::InvalidImage("buffer size mismatch".into()))?;
    buf.save(path).map_err(|e| decode_error(path, e))
}

pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    save_plane(&mask.to_raster(), 0, path)
}

/// Any pixel with nonzero luminance is foreground.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = image::open(path)
        .map_err(|e| decode_error(path, e))?
        .to_luma8();
    let (w, h) = img.dimensions();
    BinaryMask::new(
        w as usize,
        h as usize,
        img.as_raw().iter().map(|&v| v > 0).collect(),
    )
}
