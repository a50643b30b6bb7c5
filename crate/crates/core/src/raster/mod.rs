//! Image carriers and the low-level operators the segmentation chain composes.
//!
//! Intensities are `f64` on a 0–255 working scale. Nothing is clipped or
//! quantised between stages unless an operator says so.

mod color;
mod filter;
mod morphology;
mod regions;

pub use color::{
    black_to_yellow, cmyk_to_rgb, merge_channels, rgb_to_cmyk, rgb_to_gray, split_channels,
};
pub use filter::{
    combine_stretch_equalize, contrast_stretch, equalize_histogram, local_max_filter, percentile,
    threshold_below,
};
pub use morphology::dilate;
pub use regions::{connected_components, select_center_object, Connectivity, LabeledRegions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorSpace {
    Rgb,
    Cmyk,
    Gray,
    Binary,
}

impl ColorSpace {
    pub fn plane_count(self) -> usize {
        match self {
            ColorSpace::Rgb => 3,
            ColorSpace::Cmyk => 4,
            ColorSpace::Gray | ColorSpace::Binary => 1,
        }
    }
}

/// A multi-plane pixel grid tagged with its color space.
///
/// Planes are stored row-major; pixel `(row, col)` lives at `row * width + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    planes: Vec<Vec<f64>>,
}

impl RasterImage {
    pub fn new(
        width: usize,
        height: usize,
        colorspace: ColorSpace,
        planes: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if planes.len() != colorspace.plane_count() {
            return Err(Error::InvalidImage(format!(
                "{colorspace:?} needs {} planes, got {}",
                colorspace.plane_count(),
                planes.len()
            )));
        }
        let n = width * height;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidImage(format!(
                "every plane must hold {width}x{height} values"
            )));
        }
        if colorspace == ColorSpace::Binary && planes[0].iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidImage(
                "binary plane holds a value outside {0, 1}".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            colorspace,
            planes,
        })
    }

    pub fn gray(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(width, height, ColorSpace::Gray, vec![values])
    }

    pub fn filled(width: usize, height: usize, colorspace: ColorSpace, value: f64) -> Self {
        let planes = vec![vec![value; width * height]; colorspace.plane_count()];
        Self {
            width,
            height,
            colorspace,
            planes,
        }
    }

    /// Builds an RGB image from interleaved 8-bit samples.
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "expected {} RGB bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        let mut planes: Vec<Vec<f64>> =
            (0..3).map(|_| Vec::with_capacity(width * height)).collect();
        for px in data.chunks_exact(3) {
            for (plane, &v) in planes.iter_mut().zip(px) {
                plane.push(f64::from(v));
            }
        }
        Self::new(width, height, ColorSpace::Rgb, planes)
    }

    /// Interleaved 8-bit samples, each value rounded and clamped to 0–255.
    pub fn to_u8_interleaved(&self) -> Vec<u8> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * self.planes.len());
        for i in 0..n {
            for plane in &self.planes {
                out.push(plane[i].round().clamp(0.0, 255.0) as u8);
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }

    pub fn plane(&self, index: usize) -> &[f64] {
        &self.planes[index]
    }

    pub fn into_planes(self) -> Vec<Vec<f64>> {
        self.planes
    }

    pub fn get(&self, plane: usize, row: usize, col: usize) -> f64 {
        self.planes[plane][row * self.width + col]
    }

    pub(crate) fn expect(&self, colorspace: ColorSpace) -> Result<()> {
        if self.colorspace == colorspace {
            Ok(())
        } else {
            Err(Error::ColorSpace {
                expected: colorspace,
                found: self.colorspace,
            })
        }
    }

    pub(crate) fn same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other,
            })
        }
    }

    /// Returns a single-plane gray image with the given plane copied out.
    pub fn plane_image(&self, index: usize) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            colorspace: ColorSpace::Gray,
            planes: vec![self.planes[index].clone()],
        }
    }
}

/// A single-channel foreground/background grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Foreground pixel coordinates as `(row, col)` in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i / w, i % w))
    }

    pub fn to_raster(&self) -> RasterImage {
        let plane = self
            .data
            .iter()
            .map(|&v| if v { 1.0 } else { 0.0 })
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            colorspace: ColorSpace::Binary,
            planes: vec![plane],
        }
    }

    /// Sørensen–Dice overlap, 1.0 when both masks are empty.
    pub fn dice(&self, other: &BinaryMask) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        let (a, b) = (self.count(), other.count());
        if a + b == 0 {
            return Ok(1.0);
        }
        let both = self
            .data
            .iter()
            .zip(&other.data)
            .filter(|(&x, &y)| x && y)
            .count();
        Ok(2.0 * both as f64 / (a + b) as f64)
    }
}

impl TryFrom<&RasterImage> for BinaryMask {
    type Error = Error;

    fn try_from(img: &RasterImage) -> Result<Self> {
        img.expect(ColorSpace::Binary)?;
        Ok(Self {
            width: img.width,
            height: img.height,
            data: img.planes[0].iter().map(|&v| v == 1.0).collect(),
        })
    }
}
