//! The 24 interpretable descriptors, in a fixed order:
//! 8 shape, 14 color, 2 texture.

pub mod circle;
pub mod color;
pub mod harris;
pub mod shape;
pub mod texture;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{rgb_to_gray, BinaryMask, RasterImage};

pub use circle::{min_enclosing_circle, Circle};
pub use color::{extract_color_features, masked_stats, ColorFeatures, SdConvention};
pub use harris::{count_corners, HarrisConfig};
pub use shape::{
    circularity, eccentricity, extract_shape_features, shape_eigenvalues, sp_value, spei,
    CircularityMode, ShapeConfig, ShapeFeatures, SpeiFrame,
};
pub use texture::{cooccurrence, texture_stats, CooccurrenceMatrix, ShiftSpec};

pub const FEATURE_COUNT: usize = 24;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "White EI",
    "Black EI",
    "SP value",
    "1st Eigenvalue",
    "2nd Eigenvalue",
    "Eccentricity",
    "Circularity",
    "Number of Corners",
    "Mean R",
    "SD R",
    "Mean G",
    "SD G",
    "Mean B",
    "SD B",
    "Mean C",
    "SD C",
    "Mean M",
    "SD M",
    "Mean Y",
    "SD Y",
    "Mean K",
    "SD K",
    "Mean P",
    "SD P",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Shape,
    Color,
    Texture,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Shape, Category::Color, Category::Texture];

    /// Category of the feature at 0-based `index`.
    pub fn of(index: usize) -> Category {
        match index {
            0..=7 => Category::Shape,
            8..=21 => Category::Color,
            _ => Category::Texture,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Shape => "Shape",
            Category::Color => "Color",
            Category::Texture => "Texture",
        }
    }
}

/// One sample's 24 descriptors in table order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn from_parts(
        shape: &ShapeFeatures,
        color: &ColorFeatures,
        texture: (f64, f64),
    ) -> Result<Self> {
        let ecc = shape
            .eccentricity
            .ok_or_else(|| Error::Undefined("eccentricity of a degenerate shape".into()))?;
        let mut v = [0.0; FEATURE_COUNT];
        v[..8].copy_from_slice(&[
            shape.white_ei as f64,
            shape.black_ei as f64,
            shape.sp,
            shape.eig1,
            shape.eig2,
            ecc,
            shape.circularity,
            shape.corner_count as f64,
        ]);
        v[8..22].copy_from_slice(&color.to_array());
        v[22] = texture.0;
        v[23] = texture.1;
        Self::new(v)
    }

    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Undefined(format!(
                "{} is not finite",
                FEATURE_NAMES[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub shape: ShapeConfig,
    pub sd: SdConvention,
    pub shifts: ShiftSpec,
}

/// All 24 descriptors for an RGB image and its segmentation mask.
pub fn extract_features(
    img: &RasterImage,
    mask: &BinaryMask,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let shape = extract_shape_features(mask, &cfg.shape)?;
    let color = extract_color_features(img, mask, cfg.sd)?;
    let gray = rgb_to_gray(img)?;
    let texture = texture_stats(&cooccurrence(&gray, mask, cfg.shifts)?);
    FeatureVector::from_parts(&shape, &color, texture)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_follow_feature_order() {
        let counts =
            Category::ALL.map(|c| (0..FEATURE_COUNT).filter(|&i| Category::of(i) == c).count());
        assert_eq!(counts, [8, 14, 2]);
        assert_eq!(Category::of(7), Category::Shape);
        assert_eq!(Category::of(8), Category::Color);
        assert_eq!(FEATURE_NAMES[16], "Mean M");
        assert_eq!(Category::of(22), Category::Texture);
    }

    #[test]
    fn undefined_eccentricity_is_rejected() {
        let line = BinaryMask::from_fn(20, 20, |r, c| r == 10 && (5..15).contains(&c));
        let shape = extract_shape_features(&line, &ShapeConfig::default()).unwrap();
        assert_eq!(shape.eccentricity, None);
        assert!(FeatureVector::from_parts(&shape, &ColorFeatures::default(), (0.0, 0.0)).is_err());
    }
}
