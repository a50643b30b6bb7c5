//! Random-forest classifier and the training protocol around it: stratified
//! hold-out split, stratified k-fold tuning of `mtry`, final refit and
//! out-of-bag permutation importance.

mod importance;
mod split;
mod tree;
mod tune;

pub use importance::{
    holdout_importance, oob_accuracy, permutation_importance, permuted_oob_accuracy,
};
pub use split::{stratified_folds, stratified_split};
pub use tree::{train_tree, DecisionTree, Node};
pub use tune::{cross_validate, TuneConfig, TuneResult};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Healthy,
    Malignant,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Healthy => 0,
            Label::Malignant => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Healthy => "healthy",
            Label::Malignant => "malignant",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "healthy" | "hem" | "0" | "negative" => Ok(Label::Healthy),
            "malignant" | "all" | "1" | "positive" => Ok(Label::Malignant),
            other => Err(Error::Schema(format!("unknown label {other:?}"))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Row-major feature table with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    values: Vec<f64>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn new(n_features: usize, values: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if n_features == 0 || values.len() != n_features * labels.len() {
            return Err(Error::Schema(format!(
                "{} values do not fill {} rows of {n_features} features",
                values.len(),
                labels.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Undefined(format!(
                "row {} feature {}",
                i / n_features,
                i % n_features
            )));
        }
        Ok(Self {
            n_features,
            values,
            labels,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::Schema("ragged feature rows".into()));
        }
        Self::new(n_features, rows.concat(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Dataset {
            n_features: self.n_features,
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Applies `f` to one column in place.
    pub fn map_column(&mut self, feature: usize, f: impl Fn(f64) -> f64) {
        for r in 0..self.len() {
            let v = &mut self.values[r * self.n_features + feature];
            *v = f(*v);
        }
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0, 0];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }
}

/// Mixes a base seed with tags (splitmix64 finaliser) so that related runs
/// get unrelated streams.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = seed;
    for &t in tags {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// RNG stream for tree `index` of a forest seeded with `seed`. Streams are
/// independent of the forest size.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_sample<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Rows of `0..n` absent from `sample`.
pub fn out_of_bag(n: usize, sample: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &i in sample {
        seen[i] = true;
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mtry: usize,
    pub min_node_size: usize,
    pub seed: u64,
    /// Label returned on an even vote (and inside tied leaves).
    pub tie_break: Label,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: 1,
            min_node_size: 1,
            seed: 0,
            tie_break: Label::Malignant,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    /// SHA-256 over the newline-joined feature names.
    pub feature_hash: String,
    pub n_features: usize,
    pub mtry: usize,
    pub n_trees: usize,
    pub min_node_size: usize,
    pub seed: u64,
    pub tie_break: Label,
    pub trees: Vec<DecisionTree>,
    /// Out-of-bag row indices per tree, relative to the training data.
    pub oob: Vec<Vec<u32>>,
}

pub fn feature_hash(names: &[String]) -> String {
    hex::encode(Sha256::digest(names.join("\n").as_bytes()))
}

pub fn train_forest(
    data: &Dataset,
    feature_names: &[String],
    cfg: &ForestConfig,
) -> Result<RandomForestModel> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    if cfg.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    if cfg.mtry == 0 || cfg.mtry > data.n_features() {
        return Err(Error::InvalidParameter(format!(
            "mtry {} outside 1..={}",
            cfg.mtry,
            data.n_features()
        )));
    }
    if feature_names.len() != data.n_features() {
        return Err(Error::Schema(
            "feature name count differs from column count".into(),
        ));
    }
    let n = data.len();
    let grown = cfg.exec.map_range(cfg.n_trees, |t| {
        let mut rng = tree_rng(cfg.seed, t);
        let sample = bootstrap_sample(n, &mut rng);
        let tree = train_tree(data, &sample, cfg.mtry, cfg.min_node_size, &mut rng);
        let oob = out_of_bag(n, &sample)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        (tree, oob)
    });
    let (trees, oob) = grown.into_iter().unzip();
    Ok(RandomForestModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_names: feature_names.to_vec(),
        feature_hash: feature_hash(feature_names),
        n_features: data.n_features(),
        mtry: cfg.mtry,
        n_trees: cfg.n_trees,
        min_node_size: cfg.min_node_size,
        seed: cfg.seed,
        tie_break: cfg.tie_break,
        trees,
        oob,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Fraction of trees voting malignant.
    pub vote_fraction: f64,
}

impl RandomForestModel {
    pub fn malignant_votes(&self, x: &[f64]) -> usize {
        self.trees
            .iter()
            .filter(|t| t.predict(x, self.tie_break) == Label::Malignant)
            .count()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::Schema(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Undefined(format!("feature {i} is not finite")));
        }
        let votes = self.malignant_votes(x);
        Ok(Prediction {
            label: vote_label(votes, self.trees.len(), self.tie_break),
            vote_fraction: votes as f64 / self.trees.len() as f64,
        })
    }

    pub fn predict_all(&self, data: &Dataset, exec: Execution) -> Result<Vec<Prediction>> {
        exec.map_range(data.len(), |i| self.predict(data.row(i)))
            .into_iter()
            .collect()
    }

    pub fn check_features(&self, names: &[String]) -> Result<()> {
        if feature_hash(names) != self.feature_hash {
            return Err(Error::Schema(
                "feature columns differ from those the model was trained on".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "model format version {} is not supported",
                model.format_version
            )));
        }
        if model.trees.len() != model.n_trees || model.oob.len() != model.n_trees {
            return Err(Error::Schema("tree count does not match header".into()));
        }
        if feature_hash(&model.feature_names) != model.feature_hash {
            return Err(Error::Schema(
                "feature hash does not match feature names".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the serialized model.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }
}

pub(crate) fn vote_label(malignant_votes: usize, n_trees: usize, tie: Label) -> Label {
    match (2 * malignant_votes).cmp(&n_trees) {
        std::cmp::Ordering::Greater => Label::Malignant,
        std::cmp::Ordering::Less => Label::Healthy,
        std::cmp::Ordering::Equal => tie,
    }
}
