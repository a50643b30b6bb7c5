//! Permutation variable importance (mean decrease in accuracy).

use rand::seq::SliceRandom;

use super::{derive_seed, tree_rng, vote_label, Dataset, DecisionTree, RandomForestModel};
use crate::error::{Error, Result};
use crate::exec::Execution;

fn check(model: &RandomForestModel, data: &Dataset) -> Result<()> {
    if data.n_features() != model.n_features {
        return Err(Error::Schema("dataset width differs from the model".into()));
    }
    let max_oob = model.oob.iter().flatten().copied().max().unwrap_or(0) as usize;
    if !model.oob.iter().all(Vec::is_empty) && max_oob >= data.len() {
        return Err(Error::Schema(
            "out-of-bag indices do not fit this dataset".into(),
        ));
    }
    Ok(())
}

/// Accuracy of one tree on `rows`, with the listed columns shuffled among
/// those rows (each column independently).
fn tree_accuracy(
    tree: &DecisionTree,
    model: &RandomForestModel,
    data: &Dataset,
    rows: &[usize],
    permuted: &[(usize, Vec<usize>)],
) -> f64 {
    let mut x = vec![0.0; data.n_features()];
    let correct = rows
        .iter()
        .enumerate()
        .filter(|&(pos, &r)| {
            x.copy_from_slice(data.row(r));
            for (col, order) in permuted {
                x[*col] = data.value(rows[order[pos]], *col);
            }
            tree.predict(&x, model.tie_break) == data.labels[r]
        })
        .count();
    correct as f64 / rows.len() as f64
}

fn oob_rows(model: &RandomForestModel, t: usize) -> Vec<usize> {
    model.oob[t].iter().map(|&i| i as usize).collect()
}

/// Out-of-bag MDA per feature: for every tree, its OOB accuracy minus its OOB
/// accuracy after shuffling that feature among the OOB rows, averaged over
/// `repeats` shuffles and then over trees with a non-empty OOB set.
///
/// `data` must be the data the model was trained on.
pub fn permutation_importance(
    model: &RandomForestModel,
    data: &Dataset,
    repeats: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    check(model, data)?;
    let repeats = repeats.max(1);
    let p = model.n_features;
    let per_tree = exec.map_range(model.trees.len(), |t| {
        let rows = oob_rows(model, t);
        if rows.is_empty() {
            return None;
        }
        let tree = &model.trees[t];
        let base = tree_accuracy(tree, model, data, &rows, &[]);
        let mut rng = tree_rng(derive_seed(seed, &[0x1A7]), t);
        let drops: Vec<f64> = (0..p)
            .map(|q| {
                let total: f64 = (0..repeats)
                    .map(|_| {
                        let mut order: Vec<usize> = (0..rows.len()).collect();
                        order.shuffle(&mut rng);
                        base - tree_accuracy(tree, model, data, &rows, &[(q, order)])
                    })
                    .sum();
                total / repeats as f64
            })
            .collect();
        Some(drops)
    });
    let used: Vec<Vec<f64>> = per_tree.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::InsufficientData(
            "no tree has out-of-bag rows".into(),
        ));
    }
    Ok((0..p)
        .map(|q| used.iter().map(|d| d[q]).sum::<f64>() / used.len() as f64)
        .collect())
}

/// Mean per-tree OOB accuracy with `columns` shuffled (none = baseline).
pub fn permuted_oob_accuracy(
    model: &RandomForestModel,
    data: &Dataset,
    columns: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    check(model, data)?;
    let per_tree = exec.map_range(model.trees.len(), |t| {
        let rows = oob_rows(model, t);
        if rows.is_empty() {
            return None;
        }
        let mut rng = tree_rng(derive_seed(seed, &[0xA11]), t);
        let permuted: Vec<(usize, Vec<usize>)> = columns
            .iter()
            .map(|&c| {
                let mut order: Vec<usize> = (0..rows.len()).collect();
                order.shuffle(&mut rng);
                (c, order)
            })
            .collect();
        Some(tree_accuracy(
            &model.trees[t],
            model,
            data,
            &rows,
            &permuted,
        ))
    });
    let used: Vec<f64> = per_tree.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::InsufficientData(
            "no tree has out-of-bag rows".into(),
        ));
    }
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}

/// Majority-vote accuracy where each row is scored only by the trees that did
/// not see it. Rows with no such tree are skipped.
pub fn oob_accuracy(model: &RandomForestModel, data: &Dataset) -> Result<f64> {
    check(model, data)?;
    let mut votes = vec![[0usize; 2]; data.len()];
    for (tree, oob) in model.trees.iter().zip(&model.oob) {
        for &r in oob {
            let r = r as usize;
            votes[r][tree.predict(data.row(r), model.tie_break).index()] += 1;
        }
    }
    let mut scored = 0;
    let mut correct = 0;
    for (r, v) in votes.iter().enumerate() {
        let n = v[0] + v[1];
        if n == 0 {
            continue;
        }
        scored += 1;
        if vote_label(v[1], n, model.tie_break) == data.labels[r] {
            correct += 1;
        }
    }
    if scored == 0 {
        return Err(Error::InsufficientData(
            "no row is out of bag for any tree".into(),
        ));
    }
    Ok(correct as f64 / scored as f64)
}

/// Forest-level MDA on an independent labelled set: accuracy drop of the full
/// vote when one column is shuffled across the set.
pub fn holdout_importance(
    model: &RandomForestModel,
    data: &Dataset,
    repeats: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    if data.n_features() != model.n_features {
        return Err(Error::Schema("dataset width differs from the model".into()));
    }
    if data.is_empty() {
        return Err(Error::InsufficientData("empty evaluation set".into()));
    }
    let repeats = repeats.max(1);
    let accuracy = |col: Option<(usize, &[usize])>| {
        let mut x = vec![0.0; data.n_features()];
        let correct = (0..data.len())
            .filter(|&r| {
                x.copy_from_slice(data.row(r));
                if let Some((c, order)) = col {
                    x[c] = data.value(order[r], c);
                }
                vote_label(
                    model.malignant_votes(&x),
                    model.trees.len(),
                    model.tie_break,
                ) == data.labels[r]
            })
            .count();
        correct as f64 / data.len() as f64
    };
    let base = accuracy(None);
    Ok(exec.map_range(model.n_features, |q| {
        let mut rng = tree_rng(derive_seed(seed, &[0x401D]), q);
        let total: f64 = (0..repeats)
            .map(|_| {
                let mut order: Vec<usize> = (0..data.len()).collect();
                order.shuffle(&mut rng);
                base - accuracy(Some((q, &order)))
            })
            .sum();
        total / repeats as f64
    }))
}
