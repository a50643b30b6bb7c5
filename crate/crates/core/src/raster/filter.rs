use super::{BinaryMask, ColorSpace, RasterImage};
use crate::error::{Error, Result};

/// Sliding-window maximum with edge replication at the borders.
///
/// Runs as two 1-D passes (rows, then columns); the max over a square window
/// factorises exactly.
pub fn local_max_filter(img: &RasterImage, window: usize) -> Result<RasterImage> {
    img.expect(ColorSpace::Gray)?;
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "window must be odd and positive, got {window}"
        )));
    }
    let (w, h) = img.dims();
    let r = window / 2;
    let src = img.plane(0);
    let mut tmp = vec![0.0; w * h];
    for row in 0..h {
        let line = &src[row * w..(row + 1) * w];
        for col in 0..w {
            let lo = col.saturating_sub(r);
            let hi = (col + r).min(w - 1);
            tmp[row * w + col] = line[lo..=hi]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        let lo = row.saturating_sub(r);
        let hi = (row + r).min(h - 1);
        for col in 0..w {
            out[row * w + col] = (lo..=hi)
                .map(|rr| tmp[rr * w + col])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    RasterImage::gray(w, h, out)
}

/// Percentile by linear interpolation between order statistics (`p` in 0–100).
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyImage);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "percentile {p} outside 0..=100"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Linear stretch mapping the `p_low` percentile to 0 and `p_high` to 255,
/// clipped to 0–255. A flat image (equal percentiles) maps to all zeros.
pub fn contrast_stretch(img: &RasterImage, p_low: f64, p_high: f64) -> Result<RasterImage> {
    img.expect(ColorSpace::Gray)?;
    if p_low >= p_high {
        return Err(Error::InvalidParameter(format!(
            "p_low ({p_low}) must be below p_high ({p_high})"
        )));
    }
    let src = img.plane(0);
    let lo = percentile(src, p_low)?;
    let hi = percentile(src, p_high)?;
    let values = if hi == lo {
        vec![0.0; src.len()]
    } else {
        let span = hi - lo;
        src.iter()
            .map(|&v| ((v - lo) * 255.0 / span).clamp(0.0, 255.0))
            .collect()
    };
    RasterImage::gray(img.width(), img.height(), values)
}

/// 256-bin histogram equalization: each value maps to `255 * cdf(bin) / n`.
///
/// Values are binned by rounding to the nearest level in 0–255.
pub fn equalize_histogram(img: &RasterImage) -> Result<RasterImage> {
    img.expect(ColorSpace::Gray)?;
    let src = img.plane(0);
    if src.is_empty() {
        return Err(Error::EmptyImage);
    }
    let bin = |v: f64| v.round().clamp(0.0, 255.0) as usize;
    let mut hist = [0usize; 256];
    for &v in src {
        hist[bin(v)] += 1;
    }
    let mut cdf = [0usize; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let n = src.len() as f64;
    let values = src
        .iter()
        .map(|&v| 255.0 * cdf[bin(v)] as f64 / n)
        .collect();
    RasterImage::gray(img.width(), img.height(), values)
}

/// `2 s + e`, kept unclipped (range 0–765).
pub fn combine_stretch_equalize(s: &RasterImage, e: &RasterImage) -> Result<RasterImage> {
    s.expect(ColorSpace::Gray)?;
    e.expect(ColorSpace::Gray)?;
    s.same_dims(e.dims())?;
    let values = s
        .plane(0)
        .iter()
        .zip(e.plane(0))
        .map(|(&a, &b)| 2.0 * a + b)
        .collect();
    RasterImage::gray(s.width(), s.height(), values)
}

/// Foreground where the pixel is strictly below `min(img) + delta`.
pub fn threshold_below(img: &RasterImage, delta: f64) -> Result<BinaryMask> {
    img.expect(ColorSpace::Gray)?;
    let src = img.plane(0);
    let min = src.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = min + delta;
    BinaryMask::new(
        img.width(),
        img.height(),
        src.iter().map(|&v| v < cut).collect(),
    )
}
