//! Harris corner counting on binary masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarrisConfig {
    /// Response constant in `det(A) - k * trace(A)^2`.
    pub k: f64,
    /// Gaussian standard deviation used to integrate the gradient products.
    pub sigma: f64,
    /// Peaks must exceed this fraction of the response at the tip of an ideal
    /// right-angle corner under the same `k` and `sigma`.
    pub response_threshold: f64,
    /// Side of the non-maximum-suppression window.
    pub nms_window: usize,
}

impl Default for HarrisConfig {
    fn default() -> Self {
        Self {
            k: 0.05,
            sigma: 2.0,
            response_threshold: 0.15,
            nms_window: 5,
        }
    }
}

impl HarrisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "harris k and sigma must be positive".into(),
            ));
        }
        if self.nms_window == 0 || self.nms_window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "harris nms_window must be odd".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.response_threshold) {
            return Err(Error::InvalidParameter(
                "harris response_threshold must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Dense f64 grid with clamped reads.
struct Grid {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Grid {
    fn at(&self, r: isize, c: isize) -> f64 {
        let r = r.clamp(0, self.h as isize - 1) as usize;
        let c = c.clamp(0, self.w as isize - 1) as usize;
        self.v[r * self.w + c]
    }

    fn map(&self, f: impl Fn(isize, isize) -> f64) -> Grid {
        let mut v = Vec::with_capacity(self.v.len());
        for r in 0..self.h as isize {
            for c in 0..self.w as isize {
                v.push(f(r, c));
            }
        }
        Grid {
            w: self.w,
            h: self.h,
            v,
        }
    }

    fn gaussian(&self, kernel: &[f64]) -> Grid {
        let rad = (kernel.len() / 2) as isize;
        let rows = self.map(|r, c| {
            (-rad..=rad)
                .map(|d| kernel[(d + rad) as usize] * self.at(r, c + d))
                .sum()
        });
        rows.map(|r, c| {
            (-rad..=rad)
                .map(|d| kernel[(d + rad) as usize] * rows.at(r + d, c))
                .sum()
        })
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let rad = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-rad..=rad)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|x| x / s).collect()
}

/// Harris response map over the mask's bounding box plus a zero margin wide
/// enough that the crop does not change any value.
///
/// Returns `(width, height, response)`.
pub fn harris_response(mask: &BinaryMask, cfg: &HarrisConfig) -> Result<(usize, usize, Vec<f64>)> {
    cfg.validate()?;
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for (r, c) in mask.foreground() {
        r0 = r0.min(r);
        r1 = r1.max(r);
        c0 = c0.min(c);
        c1 = c1.max(c);
    }
    if r0 == usize::MAX {
        return Err(Error::EmptyMask);
    }
    let margin = (3.0 * cfg.sigma).ceil() as usize + cfg.nms_window + 2;
    let w = c1 - c0 + 1 + 2 * margin;
    let h = r1 - r0 + 1 + 2 * margin;
    let mut v = vec![0.0; w * h];
    for (r, c) in mask.foreground() {
        v[(r - r0 + margin) * w + (c - c0 + margin)] = 1.0;
    }
    let img = Grid { w, h, v };

    let gx = img.map(|r, c| {
        (img.at(r - 1, c + 1) + 2.0 * img.at(r, c + 1) + img.at(r + 1, c + 1))
            - (img.at(r - 1, c - 1) + 2.0 * img.at(r, c - 1) + img.at(r + 1, c - 1))
    });
    let gy = img.map(|r, c| {
        (img.at(r + 1, c - 1) + 2.0 * img.at(r + 1, c) + img.at(r + 1, c + 1))
            - (img.at(r - 1, c - 1) + 2.0 * img.at(r - 1, c) + img.at(r - 1, c + 1))
    });
    let kernel = gaussian_kernel(cfg.sigma);
    let prod = |f: &dyn Fn(usize) -> f64| Grid {
        w,
        h,
        v: (0..w * h).map(f).collect(),
    };
    let sxx = prod(&|i| gx.v[i] * gx.v[i]).gaussian(&kernel);
    let syy = prod(&|i| gy.v[i] * gy.v[i]).gaussian(&kernel);
    let sxy = prod(&|i| gx.v[i] * gy.v[i]).gaussian(&kernel);
    let response = (0..w * h)
        .map(|i| {
            let det = sxx.v[i] * syy.v[i] - sxy.v[i] * sxy.v[i];
            let tr = sxx.v[i] + syy.v[i];
            det - cfg.k * tr * tr
        })
        .collect();
    Ok((w, h, response))
}

/// Peak response of a filled axis-aligned square, i.e. of a clean 90° corner.
///
/// A mask is binary, so responses live on an absolute scale and this is the
/// natural unit for the threshold. Normalising by a shape's own maximum would
/// always keep at least one peak, even on a disk.
pub fn reference_corner_response(cfg: &HarrisConfig) -> Result<f64> {
    let side = (12.0 * cfg.sigma).ceil().max(40.0) as usize;
    let square = BinaryMask::from_fn(side, side, |_, _| true);
    let (_, _, resp) = harris_response(&square, cfg)?;
    Ok(resp.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Number of Harris peaks that survive thresholding and non-maximum
/// suppression. Plateaus are resolved in favour of the first pixel in raster
/// order.
pub fn count_corners(mask: &BinaryMask, cfg: &HarrisConfig) -> Result<usize> {
    let (w, h, resp) = harris_response(mask, cfg)?;
    let cut = (cfg.response_threshold * reference_corner_response(cfg)?).max(0.0);
    let rad = (cfg.nms_window / 2) as isize;
    let mut count = 0;
    for r in 0..h as isize {
        for c in 0..w as isize {
            let v = resp[r as usize * w + c as usize];
            if v <= cut {
                continue;
            }
            let mut peak = true;
            'window: for dr in -rad..=rad {
                for dc in -rad..=rad {
                    let (rr, cc) = (r + dr, c + dc);
                    if (dr, dc) == (0, 0)
                        || rr < 0
                        || cc < 0
                        || rr >= h as isize
                        || cc >= w as isize
                    {
                        continue;
                    }
                    let o = resp[rr as usize * w + cc as usize];
                    let earlier = (dr, dc) < (0, 0);
                    if o > v || (earlier && o == v) {
                        peak = false;
                        break 'window;
                    }
                }
            }
            if peak {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(radius: f64) -> BinaryMask {
        let size = (2.0 * radius) as usize + 21;
        let c = (size as f64 - 1.0) / 2.0;
        BinaryMask::from_fn(size, size, |r, col| {
            (r as f64 - c).hypot(col as f64 - c) <= radius
        })
    }

    #[test]
    fn rectangle_has_four_corners() {
        let m = BinaryMask::from_fn(120, 100, |r, c| {
            (30..70).contains(&r) && (30..90).contains(&c)
        });
        assert_eq!(count_corners(&m, &HarrisConfig::default()).unwrap(), 4);
    }

    #[test]
    fn disks_have_none() {
        for r in [30.0, 50.0, 70.0] {
            assert_eq!(
                count_corners(&disk(r), &HarrisConfig::default()).unwrap(),
                0,
                "radius {r}"
            );
        }
    }

    #[test]
    fn right_triangle_has_three() {
        let m = BinaryMask::from_fn(120, 120, |r, c| {
            r >= 20 && c >= 20 && r < 100 && (c - 20) <= (r - 20)
        });
        assert_eq!(count_corners(&m, &HarrisConfig::default()).unwrap(), 3);
    }

    #[test]
    fn shape_touching_the_border_still_has_corners() {
        let m = BinaryMask::from_fn(40, 30, |r, c| r < 20 && c < 25);
        assert_eq!(count_corners(&m, &HarrisConfig::default()).unwrap(), 4);
    }

    #[test]
    fn config_validation() {
        let bad = HarrisConfig {
            nms_window: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = HarrisConfig {
            sigma: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(count_corners(&BinaryMask::empty(5, 5), &HarrisConfig::default()).is_err());
    }
}
