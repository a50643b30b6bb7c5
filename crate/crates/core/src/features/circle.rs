//! Minimum enclosing circle (Welzl's randomized incremental algorithm).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

const EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    /// `(row, col)`
    pub center: (f64, f64),
    pub radius: f64,
}

impl Circle {
    fn from_point(p: (f64, f64)) -> Self {
        Circle {
            center: p,
            radius: 0.0,
        }
    }

    fn from_pair(a: (f64, f64), b: (f64, f64)) -> Self {
        let center = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        Circle {
            center,
            radius: dist(a, b) / 2.0,
        }
    }

    fn from_triple(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Self {
        let (bx, by) = (b.0 - a.0, b.1 - a.1);
        let (cx, cy) = (c.0 - a.0, c.1 - a.1);
        let d = 2.0 * (bx * cy - by * cx);
        if d.abs() < 1e-12 {
            // Collinear: the widest pair spans the other point.
            return [
                Circle::from_pair(a, b),
                Circle::from_pair(a, c),
                Circle::from_pair(b, c),
            ]
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .expect("three candidates");
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        Circle {
            center: (a.0 + ux, a.1 + uy),
            radius: ux.hypot(uy),
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        dist(self.center, p) <= self.radius + EPS
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Smallest circle containing every point. Expected linear time.
pub fn enclosing_circle(points: &[(f64, f64)]) -> Option<Circle> {
    let mut pts = points.to_vec();
    let first = *pts.first()?;
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let mut c = Circle::from_point(first);
    for i in 0..pts.len() {
        if c.contains(pts[i]) {
            continue;
        }
        c = Circle::from_point(pts[i]);
        for j in 0..i {
            if c.contains(pts[j]) {
                continue;
            }
            c = Circle::from_pair(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(pts[k]) {
                    c = Circle::from_triple(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    Some(c)
}

/// Minimum enclosing circle of the foreground pixel centers.
///
/// Only boundary pixels are fed to the solver; every hull vertex is a boundary
/// pixel, so the circle is the same.
pub fn min_enclosing_circle(mask: &BinaryMask) -> Result<Circle> {
    let (w, h) = mask.dims();
    let boundary: Vec<(f64, f64)> = mask
        .foreground()
        .filter(|&(r, c)| {
            r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !mask.get(r - 1, c)
                || !mask.get(r + 1, c)
                || !mask.get(r, c - 1)
                || !mask.get(r, c + 1)
        })
        .map(|(r, c)| (r as f64, c as f64))
        .collect();
    enclosing_circle(&boundary).ok_or(Error::EmptyMask)
}
