//! The end-to-end training and evaluation protocol: stratified hold-out split,
//! k-fold `mtry` search on the training pool, refit on the whole pool, then
//! scoring on the held-out rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, EvaluationReport};
use crate::exec::Execution;
use crate::forest::{
    cross_validate, derive_seed, permutation_importance, stratified_split, train_forest, Dataset,
    ForestConfig, Label, RandomForestModel, TuneConfig, TuneResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub seed: u64,
    pub n_trees: usize,
    pub folds: usize,
    pub grid_max: usize,
    pub validation_fraction: f64,
    pub min_node_size: usize,
    pub tie_break: Label,
    pub importance_repeats: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            seed: 42,
            n_trees: 500,
            folds: 5,
            grid_max: 10,
            validation_fraction: 0.2,
            min_node_size: 1,
            tie_break: Label::Malignant,
            importance_repeats: 5,
            exec: Execution::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.grid_max == 0 || self.grid_max > n_features {
            return Err(Error::InvalidParameter(format!(
                "grid_max {} outside 1..={n_features}",
                self.grid_max
            )));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(
                "at least two folds are needed".into(),
            ));
        }
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidParameter(
                "validation_fraction must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Everything `train` produces. Indices refer to rows of the full dataset.
#[derive(Debug, Clone)]
pub struct TrainedProtocol {
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
    pub tune: TuneResult,
    pub model: RandomForestModel,
}

pub fn train(
    data: &Dataset,
    feature_names: &[String],
    cfg: &ProtocolConfig,
) -> Result<TrainedProtocol> {
    cfg.validate(data.n_features())?;
    let (train_rows, validation_rows) = stratified_split(
        &data.labels,
        cfg.validation_fraction,
        derive_seed(cfg.seed, &[0x5917]),
    )?;
    let pool = data.subset(&train_rows);
    let tune_cfg = TuneConfig {
        folds: cfg.folds,
        grid: (1..=cfg.grid_max).collect(),
        n_trees: cfg.n_trees,
        min_node_size: cfg.min_node_size,
        seed: derive_seed(cfg.seed, &[0x7E57]),
        tie_break: cfg.tie_break,
        exec: cfg.exec,
    };
    let tune = cross_validate(&pool, feature_names, &tune_cfg)?;
    let forest_cfg = ForestConfig {
        n_trees: cfg.n_trees,
        mtry: tune.chosen_mtry,
        min_node_size: cfg.min_node_size,
        seed: derive_seed(cfg.seed, &[0xF1A1]),
        tie_break: cfg.tie_break,
        exec: cfg.exec,
    };
    let model = train_forest(&pool, feature_names, &forest_cfg)?;
    Ok(TrainedProtocol {
        train_rows,
        validation_rows,
        tune,
        model,
    })
}

/// Confusion matrix of `model` on `data`.
pub fn confusion(
    model: &RandomForestModel,
    data: &Dataset,
    exec: Execution,
) -> Result<ConfusionMatrix> {
    let predicted: Vec<Label> = model
        .predict_all(data, exec)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    ConfusionMatrix::from_predictions(&data.labels, &predicted)
}

/// Scores the model on the held-out rows; importance is the out-of-bag MDA
/// on the training pool the model was fitted to.
pub fn evaluate(
    model: &RandomForestModel,
    data: &Dataset,
    train_rows: &[usize],
    validation_rows: &[usize],
    cfg: &ProtocolConfig,
) -> Result<EvaluationReport> {
    if let Some(&r) = validation_rows.iter().find(|r| train_rows.contains(r)) {
        return Err(Error::Leakage(r));
    }
    let cm = confusion(model, &data.subset(validation_rows), cfg.exec)?;
    let mda = permutation_importance(
        model,
        &data.subset(train_rows),
        cfg.importance_repeats,
        derive_seed(cfg.seed, &[0x1D9A]),
        cfg.exec,
    )?;
    EvaluationReport::build(cm, mda)
}
