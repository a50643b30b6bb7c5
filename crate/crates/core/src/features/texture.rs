//! Co-occurrence matrix of the masked grayscale image and its mean / SD.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{BinaryMask, ColorSpace, RasterImage};

pub const LEVELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftSpec {
    /// Offsets (0, +1) and (+1, 0) accumulated into one matrix.
    #[default]
    RightAndDown,
    /// A single (+1, +1) offset.
    Diagonal,
}

impl ShiftSpec {
    fn offsets(self) -> &'static [(usize, usize)] {
        match self {
            ShiftSpec::RightAndDown => &[(0, 1), (1, 0)],
            ShiftSpec::Diagonal => &[(1, 1)],
        }
    }
}

/// 256x256 pair counts, `counts[a * 256 + b]` for a pixel of level `a`
/// followed by a neighbour of level `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    pub counts: Vec<u64>,
    pub shifts: ShiftSpec,
}

impl CooccurrenceMatrix {
    pub fn get(&self, a: usize, b: usize) -> u64 {
        self.counts[a * LEVELS + b]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts level pairs in `gray × mask`; background pixels become level 0 and
/// take part in the counting.
pub fn cooccurrence(
    gray: &RasterImage,
    mask: &BinaryMask,
    shifts: ShiftSpec,
) -> Result<CooccurrenceMatrix> {
    gray.expect(ColorSpace::Gray)?;
    gray.same_dims(mask.dims())?;
    let (w, h) = gray.dims();
    let levels: Vec<usize> = gray
        .plane(0)
        .iter()
        .zip(mask.data())
        .map(|(&v, &m)| {
            if m {
                v.round().clamp(0.0, 255.0) as usize
            } else {
                0
            }
        })
        .collect();
    let mut counts = vec![0u64; LEVELS * LEVELS];
    for &(dr, dc) in shifts.offsets() {
        for r in 0..h.saturating_sub(dr) {
            for c in 0..w.saturating_sub(dc) {
                let a = levels[r * w + c];
                let b = levels[(r + dr) * w + c + dc];
                counts[a * LEVELS + b] += 1;
            }
        }
    }
    Ok(CooccurrenceMatrix { counts, shifts })
}

/// Mean and population SD over all 65 536 raw counts.
pub fn texture_stats(p: &CooccurrenceMatrix) -> (f64, f64) {
    let n = p.counts.len() as f64;
    let mean = p.counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = p
        .counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(w: usize, h: usize, v: Vec<f64>) -> RasterImage {
        RasterImage::gray(w, h, v).unwrap()
    }

    #[test]
    fn constant_region_single_cell() {
        let full = BinaryMask::from_fn(4, 4, |_, _| true);
        let p = cooccurrence(&gray(4, 4, vec![77.0; 16]), &full, ShiftSpec::RightAndDown).unwrap();
        assert_eq!(p.get(77, 77), 24);
        assert_eq!(p.total(), 24);
        assert_eq!(p.counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn checkerboard_off_diagonal_only() {
        let v = (0..36)
            .map(|i| if (i / 6 + i % 6) % 2 == 0 { 0.0 } else { 255.0 })
            .collect();
        let full = BinaryMask::from_fn(6, 6, |_, _| true);
        let p = cooccurrence(&gray(6, 6, v), &full, ShiftSpec::RightAndDown).unwrap();
        assert_eq!(p.get(0, 255) + p.get(255, 0), p.total());
        assert_eq!(p.total(), 60);
    }

    #[test]
    fn background_is_level_zero() {
        let mask = BinaryMask::from_fn(2, 1, |_, c| c == 0);
        let p = cooccurrence(
            &gray(2, 1, vec![9.0, 200.0]),
            &mask,
            ShiftSpec::RightAndDown,
        )
        .unwrap();
        assert_eq!(p.get(9, 0), 1);
    }

    #[test]
    fn stats_of_zero_and_single_cell() {
        let mut p = CooccurrenceMatrix {
            counts: vec![0; LEVELS * LEVELS],
            shifts: ShiftSpec::RightAndDown,
        };
        assert_eq!(texture_stats(&p), (0.0, 0.0));
        p.counts[5] = 24;
        let (m, s) = texture_stats(&p);
        let n: f64 = 65536.0;
        let mean = 24.0 / n;
        let var = ((24.0 - mean).powi(2) + (n - 1.0) * mean * mean) / n;
        assert!((m - mean).abs() < 1e-15);
        assert!((s - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn concentrated_gradient_pairs_have_larger_sd_than_noise() {
        let full = BinaryMask::from_fn(64, 64, |_, _| true);
        let grad: Vec<f64> = (0..64 * 64).map(|i| ((i % 64) * 4) as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise: Vec<f64> = (0..64 * 64)
            .map(|_| rng.random_range(0..256) as f64)
            .collect();
        let sd = |v| {
            texture_stats(&cooccurrence(&gray(64, 64, v), &full, ShiftSpec::RightAndDown).unwrap())
                .1
        };
        assert!(sd(grad) > sd(noise));
    }
}
