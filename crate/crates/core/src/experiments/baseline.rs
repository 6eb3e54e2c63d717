use serde::{Deserialize, Serialize};

use super::model_points;
use super::pose::SceneSetup;
use crate::error::{Error, Result};
use crate::eval::{compute_add, icp_align, render_pointcloud, CloudMode, IcpConfig};
use crate::geometry::TriangleMesh;
use crate::grad::{ObjectTemplate, ParametricScene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub n_scenes: usize,
    pub setup: SceneSetup,
    pub icp: IcpConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            n_scenes: 20,
            setup: SceneSetup::default(),
            icp: IcpConfig {
                template_samples: 20_000,
                ..IcpConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineRow {
    pub index: usize,
    pub points_single_pixel: usize,
    pub points_grid16: usize,
    /// ADD after ICP from the ground-truth pose; infinite when the cloud has
    /// no object points.
    pub add_single_pixel: f64,
    pub add_grid16: f64,
}

/// Idealized depth-sensor baselines on the same scenes and rigs as the
/// pose studies, with ICP started at the ground truth.
pub fn baseline_study(mesh: &TriangleMesh, cfg: &BaselineConfig) -> Result<Vec<BaselineRow>> {
    let scene = ParametricScene::new(ObjectTemplate::Mesh(mesh.clone()), Some(cfg.setup.plane.clone()));
    let pts = model_points(mesh);
    (0..cfg.n_scenes)
        .map(|k| {
            let gt = cfg.setup.posed(mesh, k);
            let model = scene.scene_model(&gt)?;
            let rig = cfg.setup.rig(k);
            let gt_pose = gt.pose().expect("posed");
            let run = |mode: CloudMode| -> Result<(usize, f64)> {
                let cloud = render_pointcloud(&model, &rig, mode);
                match icp_align(&cloud, mesh, &gt_pose, &cfg.icp) {
                    Ok(r) => Ok((cloud.len(), compute_add(&r.pose, &gt_pose, &pts)?)),
                    Err(Error::Empty(_)) => Ok((cloud.len(), f64::INFINITY)),
                    Err(e) => Err(e),
                }
            };
            let (points_single_pixel, add_single_pixel) = run(CloudMode::SinglePixel)?;
            let (points_grid16, add_grid16) = run(CloudMode::Grid16)?;
            Ok(BaselineRow {
                index: k,
                points_single_pixel,
                points_grid16,
                add_single_pixel,
                add_grid16,
            })
        })
        .collect()
}
