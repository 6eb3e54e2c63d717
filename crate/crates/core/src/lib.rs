//! Differentiable transient-histogram rendering for diffuse single-pixel
//! time-of-flight sensors, and recovery of parametric scenes (the 6D pose of a
//! known mesh, or a sphere's center and diameter) from a handful of such
//! histograms by analysis-by-synthesis.
//!
//! Module map:
//! - [`geometry`]: meshes, poses, the 6D rotation representation, ray casting.
//! - [`render`]: the forward model producing [`render::TransientHistogram`]s.
//! - [`grad`]: forward-mode derivatives of renders and a finite-difference oracle.
//! - [`optimize`]: Adam refinement, multi-start initialization, sensor calibration.
//! - [`datagen`]: synthetic scenes, rigs and datasets.
//! - [`eval`]: ADD / ADD-S / AUC metrics, point-cloud + ICP baselines.
//! - [`io`]: rig, histogram and parameter files.
//! - [`experiments`]: end-to-end experiment drivers shared by the CLI and tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod geometry;
pub mod grad;
pub mod io;
pub mod optimize;
pub mod render;
pub mod scalar;

pub use error::{Error, Result};
