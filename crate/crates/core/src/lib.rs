//! Interpretable white-blood-cell classification.
//!
//! The crate is organised as a pipeline:
//!
//! * [`raster`] holds the image carrier types and the individual operators.
//! * [`segmentation`] composes those operators into a single cell extractor that
//!   works unchanged on images with tissue backgrounds and on pre-masked images
//!   with black backgrounds.
//! * [`features`] computes the 24 shape, color and texture descriptors.
//! * [`forest`] is a from-scratch random forest with stratified splitting,
//!   cross-validated `mtry` tuning and out-of-bag permutation importance.
//! * [`eval`] turns predictions into confusion matrices, exact binomial
//!   confidence intervals, F1 and relative variable importance.
//! * [`protocol`] strings the forest and metrics together into the hold-out,
//!   tune, refit and score sequence.
//! * [`dataset`] handles image ingestion, manifests, feature-matrix files and a
//!   seeded phantom generator.
//!
//! Data-parallel loops (batch extraction, tree training, importance) go through
//! [`exec::Execution`], which uses rayon when the `parallel` feature is enabled
//! and falls back to plain iterators otherwise.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod exec;
pub mod features;
pub mod forest;
pub mod protocol;
pub mod raster;
pub mod segmentation;

pub use error::{Error, Result};
pub use exec::Execution;
