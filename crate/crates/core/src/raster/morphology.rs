use super::BinaryMask;

/// Binary dilation with a 3x3 square structuring element.
pub fn dilate(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = BinaryMask::empty(w, h);
    for (row, col) in mask.foreground() {
        for r in row.saturating_sub(1)..=(row + 1).min(h - 1) {
            for c in col.saturating_sub(1)..=(col + 1).min(w - 1) {
                out.set(r, c, true);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_grows_to_block() {
        let m = BinaryMask::from_fn(5, 5, |r, c| r == 2 && c == 2);
        let d = dilate(&m);
        assert_eq!(
            d,
            BinaryMask::from_fn(5, 5, |r, c| (1..=3).contains(&r) && (1..=3).contains(&c))
        );
    }

    #[test]
    fn saturated_and_empty_fixed_points() {
        let full = BinaryMask::from_fn(4, 3, |_, _| true);
        assert_eq!(dilate(&full), full);
        let empty = BinaryMask::empty(4, 3);
        assert_eq!(dilate(&empty), empty);
    }
}
