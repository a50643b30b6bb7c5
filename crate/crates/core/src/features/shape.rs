//! Shape descriptors: encircled-image counts, SP value, covariance
//! eigenvalues, eccentricity, circularity and corner count.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::circle::{min_enclosing_circle, Circle};
use super::harris::{count_corners, HarrisConfig};
use crate::error::{Error, Result};
use crate::raster::{dilate, BinaryMask};

const EPS: f64 = 1e-9;

/// The mask placed in its minimum enclosing circle, and that circle in its
/// axis-aligned enclosing square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeiFrame {
    pub circle: Circle,
    pub square_side: f64,
    pub white_count: usize,
    pub black_count: usize,
}

impl SpeiFrame {
    pub fn sp(&self) -> f64 {
        self.white_count as f64 / (self.white_count + self.black_count) as f64
    }
}

/// Pixels (by center) inside the closed interval `[lo, hi]`.
fn lattice_span(lo: f64, hi: f64) -> (i64, i64) {
    ((lo - EPS).ceil() as i64, (hi + EPS).floor() as i64)
}

pub fn spei(mask: &BinaryMask) -> Result<SpeiFrame> {
    let circle = min_enclosing_circle(mask)?;
    let (cr, cc) = circle.center;
    let rad = circle.radius;
    let (r0, r1) = lattice_span(cr - rad, cr + rad);
    let (c0, c1) = lattice_span(cc - rad, cc + rad);
    // The square may overhang the frame; off-frame pixels count as background.
    let total = ((r1 - r0 + 1) * (c1 - c0 + 1)) as usize;
    let white = mask
        .foreground()
        .filter(|&(r, c)| {
            let (r, c) = (r as i64, c as i64);
            (r0..=r1).contains(&r) && (c0..=c1).contains(&c)
        })
        .count();
    Ok(SpeiFrame {
        circle,
        square_side: 2.0 * rad,
        white_count: white,
        black_count: total - white,
    })
}

pub fn sp_value(white: usize, black: usize) -> Result<f64> {
    if white + black == 0 {
        return Err(Error::InvalidParameter("sp of an empty frame".into()));
    }
    Ok(white as f64 / (white + black) as f64)
}

/// Eigenvalues (descending) of the population covariance of the foreground
/// `(row, col)` coordinates.
pub fn shape_eigenvalues(mask: &BinaryMask) -> Result<(f64, f64)> {
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let (mut sr, mut sc) = (0.0, 0.0);
    for (r, c) in mask.foreground() {
        sr += r as f64;
        sc += c as f64;
    }
    let (mr, mc) = (sr / n as f64, sc / n as f64);
    let (mut vrr, mut vcc, mut vrc) = (0.0, 0.0, 0.0);
    for (r, c) in mask.foreground() {
        let (dr, dc) = (r as f64 - mr, c as f64 - mc);
        vrr += dr * dr;
        vcc += dc * dc;
        vrc += dr * dc;
    }
    let (a, d, b) = (vrr / n as f64, vcc / n as f64, vrc / n as f64);
    let half_tr = (a + d) / 2.0;
    let disc = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    Ok((half_tr + disc, (half_tr - disc).max(0.0)))
}

pub fn eccentricity(eig1: f64, eig2: f64) -> Result<f64> {
    if eig2 <= 0.0 {
        return Err(Error::DegenerateShape("second eigenvalue is zero".into()));
    }
    Ok(eig1 / eig2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircularityMode {
    /// `area / (4π · perimeter)`, with perimeter = dilated area − area.
    #[default]
    AsWritten,
    /// The usual compactness `4π · area / perimeter²`.
    Standard,
}

pub fn circularity(mask: &BinaryMask, mode: CircularityMode) -> Result<f64> {
    let area = mask.count();
    if area == 0 {
        return Err(Error::EmptyMask);
    }
    let grown = dilate(mask).count();
    if grown == area {
        return Err(Error::DegenerateShape(
            "dilation did not grow the mask".into(),
        ));
    }
    let (a, p) = (area as f64, (grown - area) as f64);
    Ok(match mode {
        CircularityMode::AsWritten => a / (4.0 * PI * p),
        CircularityMode::Standard => 4.0 * PI * a / (p * p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeConfig {
    pub harris: HarrisConfig,
    pub circularity: CircularityMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFeatures {
    pub white_ei: usize,
    pub black_ei: usize,
    pub sp: f64,
    pub eig1: f64,
    pub eig2: f64,
    /// `None` when the second eigenvalue is zero.
    pub eccentricity: Option<f64>,
    pub circularity: f64,
    pub corner_count: usize,
}

pub fn extract_shape_features(mask: &BinaryMask, cfg: &ShapeConfig) -> Result<ShapeFeatures> {
    let frame = spei(mask)?;
    let (eig1, eig2) = shape_eigenvalues(mask)?;
    Ok(ShapeFeatures {
        white_ei: frame.white_count,
        black_ei: frame.black_count,
        sp: sp_value(frame.white_count, frame.black_count)?,
        eig1,
        eig2,
        eccentricity: eccentricity(eig1, eig2).ok(),
        circularity: circularity(mask, cfg.circularity)?,
        corner_count: count_corners(mask, &cfg.harris)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disk(size: usize, cr: f64, cc: f64, radius: f64) -> BinaryMask {
        BinaryMask::from_fn(size, size, |r, c| {
            (r as f64 - cr).hypot(c as f64 - cc) <= radius
        })
    }

    fn rect(h: usize, w: usize, top: usize, left: usize, rh: usize, rw: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |r, c| {
            (top..top + rh).contains(&r) && (left..left + rw).contains(&c)
        })
    }

    #[test]
    fn disk_sp_is_quarter_pi() {
        let f = spei(&disk(160, 80.0, 80.0, 50.0)).unwrap();
        assert!((f.circle.radius - 50.0).abs() <= 1.0);
        assert!((f.sp() - PI / 4.0).abs() < 0.02, "{}", f.sp());
        assert_eq!(f.white_count, disk(160, 80.0, 80.0, 50.0).count());
    }

    #[test]
    fn square_sp_is_half() {
        let f = spei(&rect(140, 140, 40, 40, 60, 60)).unwrap();
        assert!((f.sp() - 0.5).abs() < 0.02, "{}", f.sp());
        assert!((f.square_side - 59.0 * 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn overhanging_square_counts_offframe_as_black() {
        let m = rect(60, 60, 0, 0, 20, 20);
        let f = spei(&m).unwrap();
        // Square spans rows/cols -3..=22; only 23 x 23 of its 26 x 26 pixels are in frame.
        assert_eq!(f.white_count, 400);
        assert_eq!(f.white_count + f.black_count, 26 * 26);
    }

    #[test]
    fn single_pixel_record() {
        let m = BinaryMask::from_fn(9, 9, |r, c| r == 4 && c == 4);
        let f = extract_shape_features(&m, &ShapeConfig::default()).unwrap();
        assert_eq!((f.white_ei, f.black_ei), (1, 0));
        assert_eq!(f.sp, 1.0);
        assert_eq!((f.eig1, f.eig2), (0.0, 0.0));
        assert!(f.eccentricity.is_none());
        assert!((f.circularity - 1.0 / (32.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn sp_value_cases() {
        assert_eq!(sp_value(100, 100).unwrap(), 0.5);
        assert_eq!(sp_value(1, 0).unwrap(), 1.0);
        assert!(sp_value(0, 0).is_err());
    }

    #[test]
    fn eigenvalue_ratios() {
        let (a, b) = shape_eigenvalues(&disk(160, 80.0, 80.0, 50.0)).unwrap();
        assert!((a / b - 1.0).abs() < 0.05);
        let ell = BinaryMask::from_fn(140, 100, |r, c| {
            ((r as f64 - 50.0) / 20.0).powi(2) + ((c as f64 - 70.0) / 40.0).powi(2) <= 1.0
        });
        let (a, b) = shape_eigenvalues(&ell).unwrap();
        assert!((a / b - 4.0).abs() < 0.4, "{}", a / b);
        // Uniform ellipse: variances a²/4 and b²/4.
        assert!((a - 400.0).abs() < 20.0 && (b - 100.0).abs() < 8.0);
        let line = rect(40, 40, 10, 5, 1, 30);
        let (a, b) = shape_eigenvalues(&line).unwrap();
        assert!(a > 0.0 && b.abs() < 1e-12);
        assert!(eccentricity(a, b).is_err());
        assert_eq!(eccentricity(5.0, 5.0).unwrap(), 1.0);
        assert!(shape_eigenvalues(&BinaryMask::empty(4, 4)).is_err());
    }

    #[test]
    fn circularity_cases() {
        let sq = rect(100, 100, 30, 30, 40, 40);
        let expect = 1600.0 / (4.0 * PI * 164.0);
        assert!((circularity(&sq, CircularityMode::AsWritten).unwrap() - expect).abs() < 1e-12);
        let d = disk(160, 80.0, 80.0, 50.0);
        let area = d.count();
        let thin = rect(20, area / 4 + 10, 5, 2, 4, area / 4);
        assert!(
            circularity(&d, CircularityMode::AsWritten).unwrap()
                > circularity(&thin, CircularityMode::AsWritten).unwrap()
        );
        let std = circularity(&d, CircularityMode::Standard).unwrap();
        assert!(std > circularity(&thin, CircularityMode::Standard).unwrap());
        let full = BinaryMask::from_fn(5, 5, |_, _| true);
        assert!(circularity(&full, CircularityMode::AsWritten).is_err());
    }

    #[test]
    fn composite_records() {
        let cfg = ShapeConfig::default();
        let d = extract_shape_features(&disk(160, 80.0, 80.0, 50.0), &cfg).unwrap();
        assert!((d.sp - PI / 4.0).abs() < 0.02);
        assert!((d.eccentricity.unwrap() - 1.0).abs() < 0.05);
        assert_eq!(d.corner_count, 0);
        let s = extract_shape_features(&rect(140, 140, 40, 40, 60, 60), &cfg).unwrap();
        assert!((s.sp - 0.5).abs() < 0.02);
        assert_eq!(s.corner_count, 4);
        let r = extract_shape_features(&rect(120, 120, 40, 30, 40, 60), &cfg).unwrap();
        assert_eq!(r.corner_count, 4);
    }

    #[test]
    fn doubling_radius_quadruples_white() {
        let small = spei(&disk(120, 60.0, 60.0, 25.0)).unwrap();
        let big = spei(&disk(220, 110.0, 110.0, 50.0)).unwrap();
        let ratio = big.white_count as f64 / small.white_count as f64;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
        assert!((big.sp() - small.sp()).abs() < 0.02);
    }

    fn blob(seed: u64) -> impl Fn(f64, f64) -> bool {
        let a = (seed % 7) as f64 * 0.03;
        let b = (seed % 5) as f64 * 0.2 + 0.5;
        move |dr: f64, dc: f64| {
            let th = dr.atan2(dc);
            dr.hypot(dc) <= 18.0 * (1.0 + a * (3.0 * th + b).sin()) * (1.0 + 0.2 * (dc / 30.0))
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_invariant(seed in 0u64..40, dr in 0usize..12, dc in 0usize..12) {
            let shape = blob(seed);
            let a = BinaryMask::from_fn(90, 90, |r, c| shape(r as f64 - 40.0, c as f64 - 40.0));
            let b = BinaryMask::from_fn(90, 90, |r, c| shape(r as f64 - 40.0 - dr as f64, c as f64 - 40.0 - dc as f64));
            let cfg = ShapeConfig::default();
            let fa = extract_shape_features(&a, &cfg).unwrap();
            let fb = extract_shape_features(&b, &cfg).unwrap();
            prop_assert_eq!((fa.white_ei, fa.black_ei, fa.corner_count), (fb.white_ei, fb.black_ei, fb.corner_count));
            prop_assert!((fa.sp - fb.sp).abs() < 1e-12);
            prop_assert!((fa.eig1 - fb.eig1).abs() < 1e-6 && (fa.eig2 - fb.eig2).abs() < 1e-6);
            prop_assert!((fa.circularity - fb.circularity).abs() < 1e-12);
        }

        #[test]
        fn ranges_hold(seed in 0u64..200) {
            let shape = blob(seed);
            let m = BinaryMask::from_fn(80, 80, |r, c| shape(r as f64 - 40.0, c as f64 - 40.0));
            let f = extract_shape_features(&m, &ShapeConfig::default()).unwrap();
            prop_assert!(f.sp > 0.0 && f.sp <= 1.0);
            prop_assert!(f.eig1 >= f.eig2 && f.eig2 >= 0.0);
            prop_assert!(f.eccentricity.unwrap() >= 1.0);
            prop_assert!(f.circularity > 0.0);
            let circle = spei(&m).unwrap().circle;
            for (r, c) in m.foreground() {
                let d = (r as f64 - circle.center.0).hypot(c as f64 - circle.center.1);
                prop_assert!(d <= circle.radius + 0.5);
            }
        }
    }
}
