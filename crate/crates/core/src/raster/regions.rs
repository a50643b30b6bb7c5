use super::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

/// Connected foreground regions, labelled `1..=region_count` in raster order of
/// their first pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRegions {
    pub width: usize,
    pub height: usize,
    /// 0 is background.
    pub labels: Vec<u32>,
    pub region_count: usize,
    /// Per region `(row, col)` mean, indexed by `label - 1`.
    pub centroids: Vec<(f64, f64)>,
    pub sizes: Vec<usize>,
}

impl LabeledRegions {
    pub fn region_mask(&self, label: u32) -> BinaryMask {
        let data = self.labels.iter().map(|&l| l == label).collect();
        BinaryMask::new(self.width, self.height, data).expect("label grid matches dimensions")
    }
}

pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabeledRegions {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut centroids = Vec::new();
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    let offsets: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        Connectivity::Eight => &[
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ],
    };
    for start in 0..w * h {
        if !mask.data()[start] || labels[start] != 0 {
            continue;
        }
        let label = centroids.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let (mut sr, mut sc, mut n) = (0.0, 0.0, 0usize);
        while let Some(i) = stack.pop() {
            let (row, col) = (i / w, i % w);
            sr += row as f64;
            sc += col as f64;
            n += 1;
            for &(dr, dc) in offsets {
                let (r, c) = (row as isize + dr, col as isize + dc);
                if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
                    continue;
                }
                let j = r as usize * w + c as usize;
                if mask.data()[j] && labels[j] == 0 {
                    labels[j] = label;
                    stack.push(j);
                }
            }
        }
        centroids.push((sr / n as f64, sc / n as f64));
        sizes.push(n);
    }
    LabeledRegions {
        width: w,
        height: h,
        labels,
        region_count: centroids.len(),
        centroids,
        sizes,
    }
}

/// Keeps the region whose centroid is nearest the image center
/// `((height - 1) / 2, (width - 1) / 2)`; ties go to the lowest label.
///
/// Returns the mask and the winning centroid's distance to the center.
pub fn select_center_object(regions: &LabeledRegions) -> Result<(BinaryMask, f64)> {
    if regions.region_count == 0 {
        return Err(Error::SegmentationFailure("no object found".into()));
    }
    let center = (
        (regions.height as f64 - 1.0) / 2.0,
        (regions.width as f64 - 1.0) / 2.0,
    );
    let mut best = (0usize, f64::INFINITY);
    for (i, &(r, c)) in regions.centroids.iter().enumerate() {
        let d = (r - center.0).hypot(c - center.1);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok((regions.region_mask(best.0 as u32 + 1), best.1))
}
