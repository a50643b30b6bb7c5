//! Masked mean / SD over the R, G, B planes of the raw image and the C, M, Y, K
//! planes of its black→yellow remap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{black_to_yellow, rgb_to_cmyk, BinaryMask, ColorSpace, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1 (zero for a single pixel).
    Sample,
}

pub fn masked_stats(channel: &[f64], mask: &BinaryMask, sd: SdConvention) -> Result<(f64, f64)> {
    if channel.len() != mask.data().len() {
        return Err(Error::DimensionMismatch {
            left: (channel.len(), 1),
            right: (mask.data().len(), 1),
        });
    }
    let vals = || {
        channel
            .iter()
            .zip(mask.data())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
    };
    let n = vals().count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mean = vals().sum::<f64>() / n as f64;
    let ss: f64 = vals().map(|v| (v - mean).powi(2)).sum();
    let denom = match sd {
        SdConvention::Population => n as f64,
        SdConvention::Sample if n > 1 => (n - 1) as f64,
        SdConvention::Sample => return Ok((mean, 0.0)),
    };
    Ok((mean, (ss / denom).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ColorFeatures {
    pub mean_r: f64,
    pub sd_r: f64,
    pub mean_g: f64,
    pub sd_g: f64,
    pub mean_b: f64,
    pub sd_b: f64,
    pub mean_c: f64,
    pub sd_c: f64,
    pub mean_m: f64,
    pub sd_m: f64,
    pub mean_y: f64,
    pub sd_y: f64,
    pub mean_k: f64,
    pub sd_k: f64,
}

impl ColorFeatures {
    /// The 14 values in table order (mean, SD per channel, R..K).
    pub fn to_array(&self) -> [f64; 14] {
        [
            self.mean_r,
            self.sd_r,
            self.mean_g,
            self.sd_g,
            self.mean_b,
            self.sd_b,
            self.mean_c,
            self.sd_c,
            self.mean_m,
            self.sd_m,
            self.mean_y,
            self.sd_y,
            self.mean_k,
            self.sd_k,
        ]
    }
}

pub fn extract_color_features(
    img: &RasterImage,
    mask: &BinaryMask,
    sd: SdConvention,
) -> Result<ColorFeatures> {
    img.expect(ColorSpace::Rgb)?;
    img.same_dims(mask.dims())?;
    let cmyk = rgb_to_cmyk(&black_to_yellow(img)?)?;
    let stat = |plane: &[f64]| masked_stats(plane, mask, sd);
    let (mean_r, sd_r) = stat(img.plane(0))?;
    let (mean_g, sd_g) = stat(img.plane(1))?;
    let (mean_b, sd_b) = stat(img.plane(2))?;
    let (mean_c, sd_c) = stat(cmyk.plane(0))?;
    let (mean_m, sd_m) = stat(cmyk.plane(1))?;
    let (mean_y, sd_y) = stat(cmyk.plane(2))?;
    let (mean_k, sd_k) = stat(cmyk.plane(3))?;
    Ok(ColorFeatures {
        mean_r,
        sd_r,
        mean_g,
        sd_g,
        mean_b,
        sd_b,
        mean_c,
        sd_c,
        mean_m,
        sd_m,
        mean_y,
        sd_y,
        mean_k,
        sd_k,
    })
}
