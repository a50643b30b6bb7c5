use super::{ColorSpace, RasterImage};
use crate::error::Result;

/// Splits an RGB image into its red, green and blue planes.
pub fn split_channels(img: &RasterImage) -> Result<(RasterImage, RasterImage, RasterImage)> {
    img.expect(ColorSpace::Rgb)?;
    Ok((img.plane_image(0), img.plane_image(1), img.plane_image(2)))
}

/// Inverse of [`split_channels`].
pub fn merge_channels(r: &RasterImage, g: &RasterImage, b: &RasterImage) -> Result<RasterImage> {
    for c in [r, g, b] {
        c.expect(ColorSpace::Gray)?;
        c.same_dims(r.dims())?;
    }
    RasterImage::new(
        r.width(),
        r.height(),
        ColorSpace::Rgb,
        vec![
            r.plane(0).to_vec(),
            g.plane(0).to_vec(),
            b.plane(0).to_vec(),
        ],
    )
}

/// Replaces every pure-black pixel with pure yellow `(255, 255, 0)`.
pub fn black_to_yellow(img: &RasterImage) -> Result<RasterImage> {
    img.expect(ColorSpace::Rgb)?;
    let mut planes = img.planes().to_vec();
    for i in 0..img.len() {
        if planes[0][i] == 0.0 && planes[1][i] == 0.0 && planes[2][i] == 0.0 {
            planes[0][i] = 255.0;
            planes[1][i] = 255.0;
        }
    }
    RasterImage::new(img.width(), img.height(), ColorSpace::Rgb, planes)
}

fn cmyk_pixel(r: f64, g: f64, b: f64) -> [f64; 4] {
    let (r, g, b) = (r / 255.0, g / 255.0, b / 255.0);
    let k = 1.0 - r.max(g).max(b);
    if k >= 1.0 {
        return [0.0, 0.0, 0.0, 255.0];
    }
    let d = 1.0 - k;
    [
        (1.0 - r - k) / d * 255.0,
        (1.0 - g - k) / d * 255.0,
        (1.0 - b - k) / d * 255.0,
        k * 255.0,
    ]
}

/// Naive (profile-free) RGB to CMYK conversion; all four planes on 0–255.
pub fn rgb_to_cmyk(img: &RasterImage) -> Result<RasterImage> {
    img.expect(ColorSpace::Rgb)?;
    let n = img.len();
    let mut planes: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    for i in 0..n {
        for (plane, v) in planes.iter_mut().zip(cmyk_pixel(r[i], g[i], b[i])) {
            plane.push(v);
        }
    }
    RasterImage::new(img.width(), img.height(), ColorSpace::Cmyk, planes)
}

/// Naive inverse: `R = 255 (1 - C)(1 - K)` with C, K on 0–1.
pub fn cmyk_to_rgb(img: &RasterImage) -> Result<RasterImage> {
    img.expect(ColorSpace::Cmyk)?;
    let n = img.len();
    let k = img.plane(3);
    let planes = (0..3)
        .map(|c| {
            let ch = img.plane(c);
            (0..n)
                .map(|i| 255.0 * (1.0 - ch[i] / 255.0) * (1.0 - k[i] / 255.0))
                .collect()
        })
        .collect();
    RasterImage::new(img.width(), img.height(), ColorSpace::Rgb, planes)
}

/// Luma conversion `0.299 R + 0.587 G + 0.114 B`, rounded to an integer level.
pub fn rgb_to_gray(img: &RasterImage) -> Result<RasterImage> {
    img.expect(ColorSpace::Rgb)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let values = (0..img.len())
        .map(|i| {
            (0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
                .round()
                .clamp(0.0, 255.0)
        })
        .collect();
    RasterImage::gray(img.width(), img.height(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb(w: usize, h: usize, px: &[[u8; 3]]) -> RasterImage {
        let flat: Vec<u8> = px.iter().flatten().copied().collect();
        RasterImage::from_rgb8(w, h, &flat).unwrap()
    }

    #[test]
    fn split_single_pixel() {
        let (r, g, b) = split_channels(&rgb(1, 1, &[[10, 20, 30]])).unwrap();
        assert_eq!(
            (r.plane(0)[0], g.plane(0)[0], b.plane(0)[0]),
            (10.0, 20.0, 30.0)
        );
    }

    #[test]
    fn split_black_and_merge_back() {
        let black = rgb(2, 2, &[[0, 0, 0]; 4]);
        let (r, g, b) = split_channels(&black).unwrap();
        assert!(r
            .plane(0)
            .iter()
            .chain(g.plane(0))
            .chain(b.plane(0))
            .all(|&v| v == 0.0));
        let img = rgb(2, 1, &[[1, 2, 3], [200, 100, 50]]);
        let (r, g, b) = split_channels(&img).unwrap();
        assert_eq!(merge_channels(&r, &g, &b).unwrap(), img);
    }

    #[test]
    fn split_rejects_gray() {
        let gray = RasterImage::filled(2, 2, ColorSpace::Gray, 1.0);
        assert!(matches!(
            split_channels(&gray),
            Err(crate::Error::ColorSpace { .. })
        ));
    }

    #[test]
    fn black_becomes_yellow() {
        let out = black_to_yellow(&rgb(2, 1, &[[0, 0, 0], [0, 0, 1]])).unwrap();
        assert_eq!(out.to_u8_interleaved(), vec![255, 255, 0, 0, 0, 1]);
        assert_eq!(black_to_yellow(&out).unwrap(), out);
    }

    #[test]
    fn cmyk_primaries() {
        let img = rgb(3, 1, &[[255, 255, 0], [0, 0, 0], [255, 255, 255]]);
        let c = rgb_to_cmyk(&img).unwrap();
        let px = |i: usize| [c.plane(0)[i], c.plane(1)[i], c.plane(2)[i], c.plane(3)[i]];
        assert_eq!(px(0), [0.0, 0.0, 255.0, 0.0]);
        assert_eq!(px(1), [0.0, 0.0, 0.0, 255.0]);
        assert_eq!(px(2), [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn gray_levels() {
        let g = rgb_to_gray(&rgb(3, 1, &[[255, 255, 255], [0, 0, 0], [255, 0, 0]])).unwrap();
        // 0.299 * 255 = 76.245
        assert_eq!(g.plane(0), &[255.0, 0.0, 76.0]);
    }

    proptest! {
        #[test]
        fn cmyk_roundtrip_within_one_level(px in proptest::collection::vec(any::<[u8; 3]>(), 1..40)) {
            let img = rgb(px.len(), 1, &px);
            let back = cmyk_to_rgb(&rgb_to_cmyk(&img).unwrap()).unwrap();
            for (a, b) in img.planes().iter().flatten().zip(back.planes().iter().flatten()) {
                prop_assert!((a - b).abs() <= 1.0);
            }
        }
    }
}
