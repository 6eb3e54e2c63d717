//! Differentiable forward imaging model of a diffuse single-pixel ToF sensor.

pub mod binning;
pub mod engine;
pub mod histogram;
pub mod jitter;
pub mod rays;
pub mod rig;
pub mod spec;

pub use binning::soft_bin_weight;
pub use engine::{prepare_rig, render, render_prepared, render_prepared_raw, render_raw, render_rig, PreparedSensor, RayAssign};
pub use histogram::TransientHistogram;
pub use jitter::{convolve_jitter, convolve_with, delta_at_peak, resample_kernel};
pub use rays::{generate_ray_grid, laser_intensity, SensorFrame, SensorPose};
pub use rig::{Rig, RigSensor};
pub use spec::{IntensityModel, SensorSpec, SPEED_OF_LIGHT};
pub use crate::geometry::SceneModel;
