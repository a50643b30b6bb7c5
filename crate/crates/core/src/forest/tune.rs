use serde::{Deserialize, Serialize};

use super::{derive_seed, stratified_folds, train_forest, Dataset, ForestConfig, Label};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub folds: usize,
    pub grid: Vec<usize>,
    pub n_trees: usize,
    pub min_node_size: usize,
    pub seed: u64,
    pub tie_break: Label,
    pub exec: Execution,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            grid: (1..=10).collect(),
            n_trees: 500,
            min_node_size: 1,
            seed: 0,
            tie_break: Label::Malignant,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub grid: Vec<usize>,
    /// Unweighted mean of the per-fold accuracies, aligned with `grid`.
    pub cv_accuracy: Vec<f64>,
    pub fold_accuracy: Vec<Vec<f64>>,
    pub chosen_mtry: usize,
}

/// Stratified k-fold grid search over `mtry`. The same folds are used for
/// every grid point; ties pick the smallest `mtry`.
pub fn cross_validate(
    pool: &Dataset,
    feature_names: &[String],
    cfg: &TuneConfig,
) -> Result<TuneResult> {
    if cfg.grid.is_empty() {
        return Err(Error::InvalidParameter("empty mtry grid".into()));
    }
    if let Some(&bad) = cfg.grid.iter().find(|&&m| m == 0 || m > pool.n_features()) {
        return Err(Error::InvalidParameter(format!(
            "mtry {bad} outside 1..={}",
            pool.n_features()
        )));
    }
    let folds = stratified_folds(&pool.labels, cfg.folds, derive_seed(cfg.seed, &[0xF01D]))?;
    let mut in_fold = vec![usize::MAX; pool.len()];
    for (f, rows) in folds.iter().enumerate() {
        for &r in rows {
            in_fold[r] = f;
        }
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = folds
        .iter()
        .enumerate()
        .map(|(f, held)| {
            let train: Vec<usize> = (0..pool.len()).filter(|&r| in_fold[r] != f).collect();
            (train, held.clone())
        })
        .collect();
    for (train, held) in &splits {
        check_disjoint(train, held, pool.len())?;
    }

    let k = folds.len();
    let tasks = cfg.grid.len() * k;
    let scores = cfg.exec.map_range(tasks, |task| -> Result<f64> {
        let (g, f) = (task / k, task % k);
        let (train, held) = &splits[f];
        let forest_cfg = ForestConfig {
            n_trees: cfg.n_trees,
            mtry: cfg.grid[g],
            min_node_size: cfg.min_node_size,
            seed: derive_seed(cfg.seed, &[f as u64, cfg.grid[g] as u64]),
            tie_break: cfg.tie_break,
            exec: Execution::Sequential,
        };
        let model = train_forest(&pool.subset(train), feature_names, &forest_cfg)?;
        let correct = held
            .iter()
            .filter(|&&r| {
                model
                    .predict(pool.row(r))
                    .is_ok_and(|p| p.label == pool.labels[r])
            })
            .count();
        Ok(correct as f64 / held.len() as f64)
    });
    let scores: Vec<f64> = scores.into_iter().collect::<Result<_>>()?;
    let fold_accuracy: Vec<Vec<f64>> = scores.chunks(k).map(<[f64]>::to_vec).collect();
    let cv_accuracy: Vec<f64> = fold_accuracy
        .iter()
        .map(|f| f.iter().sum::<f64>() / f.len() as f64)
        .collect();
    let chosen = cfg
        .grid
        .iter()
        .zip(&cv_accuracy)
        .fold(None::<(usize, f64)>, |best, (&m, &a)| match best {
            Some((bm, ba)) if ba > a || (ba == a && bm <= m) => Some((bm, ba)),
            _ => Some((m, a)),
        })
        .expect("grid is non-empty")
        .0;
    Ok(TuneResult {
        grid: cfg.grid.clone(),
        cv_accuracy,
        fold_accuracy,
        chosen_mtry: chosen,
    })
}

/// Index bookkeeping check: no row may be both trained on and held out.
pub(crate) fn check_disjoint(train: &[usize], held: &[usize], n: usize) -> Result<()> {
    let mut used = vec![false; n];
    for &r in train {
        used[r] = true;
    }
    match held.iter().find(|&&r| used[r]) {
        Some(&r) => Err(Error::Leakage(r)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leakage_is_detected() {
        assert!(check_disjoint(&[0, 1, 2], &[3, 4], 5).is_ok());
        assert!(matches!(
            check_disjoint(&[0, 1, 2], &[2, 4], 5),
            Err(Error::Leakage(2))
        ));
    }
}
