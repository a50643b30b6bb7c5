use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Label;
use crate::error::{Error, Result};

fn strata(labels: &[Label]) -> [Vec<usize>; 2] {
    let mut s = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        s[l.index()].push(i);
    }
    s
}

/// Per-class random split into `(training, validation)` row indices, both
/// sorted ascending. Each class contributes `round(fraction * n_class)` rows
/// to validation, clamped so both sides keep at least one row.
pub fn stratified_split(
    labels: &[Label],
    validation_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&validation_fraction) || validation_fraction == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "validation fraction {validation_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (class, mut rows) in strata(labels).into_iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "class {:?} has {} samples, need at least 2",
                if class == 0 {
                    Label::Healthy
                } else {
                    Label::Malignant
                },
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        let n_val =
            ((validation_fraction * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        valid.extend_from_slice(&rows[..n_val]);
        train.extend_from_slice(&rows[n_val..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

/// Assigns every row to one of `k` folds so that each class is spread as
/// evenly as possible. Returns the held-out rows of each fold, sorted.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for mut rows in strata(labels) {
        if rows.len() < k {
            return Err(Error::InsufficientData(format!(
                "a class has {} samples, fewer than {k} folds",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        // Continue the round-robin across classes so fold sizes stay balanced.
        for (j, r) in rows.into_iter().enumerate() {
            folds[(offset + j) % k].push(r);
        }
        offset += 1;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(n: usize) -> Vec<Label> {
        (0..2 * n)
            .map(|i| {
                if i < n {
                    Label::Healthy
                } else {
                    Label::Malignant
                }
            })
            .collect()
    }

    #[test]
    fn split_130_130() {
        let labels = balanced(130);
        let (train, valid) = stratified_split(&labels, 0.2, 1).unwrap();
        let count = |rows: &[usize], l| rows.iter().filter(|&&r| labels[r] == l).count();
        assert_eq!(count(&train, Label::Healthy), 104);
        assert_eq!(count(&train, Label::Malignant), 104);
        assert_eq!(count(&valid, Label::Healthy), 26);
        assert_eq!(count(&valid, Label::Malignant), 26);
        assert_eq!(stratified_split(&labels, 0.2, 1).unwrap(), (train, valid));
    }

    #[test]
    fn split_requires_both_classes() {
        let labels = vec![Label::Healthy; 100];
        assert!(matches!(
            stratified_split(&labels, 0.2, 0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn folds_of_104_104() {
        let labels = balanced(104);
        let folds = stratified_folds(&labels, 5, 3).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..208).collect::<Vec<_>>());
        for f in &folds {
            for l in [Label::Healthy, Label::Malignant] {
                let n = f.iter().filter(|&&r| labels[r] == l).count();
                assert!((20..=22).contains(&n), "{n}");
            }
        }
    }
}
