//! Reproducible synthetic studies shared by the command-line tool and the
//! acceptance suite. Every study is a pure function of its config: trial `k`
//! draws from the RNG stream `(seed, k)`.

mod ablation;
mod baseline;
mod pose;
mod viewsweep;

pub use ablation::{ablation_study, AblationConfig, AblationRow, Variant};
pub use baseline::{baseline_study, BaselineConfig, BaselineRow};
pub use pose::{
    end_to_end_study, gradient_check_study, perturb_pose, pose_refinement_study, sphere_study, EndToEndConfig,
    GradCheckConfig, GradCheckRow, PoseStudyConfig, SceneSetup, SphereInit, SphereStudyConfig, SphereTrial, Trial,
};
pub use viewsweep::{viewsweep, SweepInit, ViewSweepConfig, ViewSweepRow};

use nalgebra::Vector3;

use crate::geometry::TriangleMesh;

/// Model points used for ADD: mesh vertices, subsampled above 2048.
pub fn model_points(mesh: &TriangleMesh) -> Vec<Vector3<f64>> {
    mesh.model_points(2048)
}

// Stream offsets keep the different random draws of one trial independent.
pub(crate) const STREAM_SCENE: u64 = 0;
pub(crate) const STREAM_RIG: u64 = 1 << 32;
pub(crate) const STREAM_PERTURB: u64 = 2 << 32;
pub(crate) const STREAM_INIT: u64 = 3 << 32;
pub(crate) const STREAM_NOISE: u64 = 4 << 32;
