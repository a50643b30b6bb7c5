//! Run configuration: one flat `key = value` file holding every protocol,
//! segmentation and feature constant. Command-line flags override it.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wbc_core::features::{FeatureConfig, HarrisConfig, SdConvention, ShapeConfig};
use wbc_core::forest::Label;
use wbc_core::protocol::ProtocolConfig;
use wbc_core::segmentation::SegmentationConfig;
use wbc_core::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_trees: usize,
    pub folds: usize,
    pub grid_max: usize,
    pub validation_fraction: f64,
    pub min_node_size: usize,
    pub importance_repeats: usize,
    pub tie_break: String,
    pub threshold_delta: f64,
    pub max_window: usize,
    pub stretch_low: f64,
    pub stretch_high: f64,
    pub harris_k: f64,
    pub harris_sigma: f64,
    pub harris_threshold: f64,
    pub harris_nms_window: usize,
    pub sd: SdConvention,
    pub execution: Execution,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        let s = SegmentationConfig::default();
        let h = HarrisConfig::default();
        RunConfig {
            seed: p.seed,
            n_trees: p.n_trees,
            folds: p.folds,
            grid_max: p.grid_max,
            validation_fraction: p.validation_fraction,
            min_node_size: p.min_node_size,
            importance_repeats: p.importance_repeats,
            tie_break: p.tie_break.as_str().to_string(),
            threshold_delta: s.threshold_delta,
            max_window: s.max_window,
            stretch_low: s.stretch_low,
            stretch_high: s.stretch_high,
            harris_k: h.k,
            harris_sigma: h.sigma,
            harris_threshold: h.response_threshold,
            harris_nms_window: h.nms_window,
            sd: SdConvention::default(),
            execution: Execution::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Validates everything that can be checked without data.
    pub fn check(&self) -> Result<()> {
        self.tie_break.parse::<Label>()?;
        if !(0.0..=100.0).contains(&self.stretch_low)
            || self.stretch_low >= self.stretch_high
            || self.stretch_high > 100.0
        {
            bail!("stretch percentiles must satisfy 0 <= low < high <= 100");
        }
        if self.max_window == 0 {
            bail!("max_window must be at least 1");
        }
        if !(self.harris_sigma > 0.0 && self.harris_k > 0.0 && self.harris_threshold >= 0.0) {
            bail!("harris_k and harris_sigma must be positive, harris_threshold non-negative");
        }
        Ok(())
    }

    pub fn protocol(&self) -> Result<ProtocolConfig> {
        Ok(ProtocolConfig {
            seed: self.seed,
            n_trees: self.n_trees,
            folds: self.folds,
            grid_max: self.grid_max,
            validation_fraction: self.validation_fraction,
            min_node_size: self.min_node_size,
            tie_break: self.tie_break.parse()?,
            importance_repeats: self.importance_repeats,
            exec: self.execution,
        })
    }

    pub fn segmentation(&self) -> SegmentationConfig {
        SegmentationConfig {
            threshold_delta: self.threshold_delta,
            max_window: self.max_window,
            stretch_low: self.stretch_low,
            stretch_high: self.stretch_high,
            ..Default::default()
        }
    }

    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            shape: ShapeConfig {
                harris: HarrisConfig {
                    k: self.harris_k,
                    sigma: self.harris_sigma,
                    response_threshold: self.harris_threshold,
                    nms_window: self.harris_nms_window,
                },
                ..Default::default()
            },
            sd: self.sd,
            ..Default::default()
        }
    }
}
