use serde::{Deserialize, Serialize};

use super::pose::{perturb_pose, SceneSetup};
use super::{model_points, STREAM_PERTURB};
use crate::datagen::stream_rng;
use crate::error::Result;
use crate::eval::{auc, compute_add, median, AUC_MAX_THRESHOLD};
use crate::geometry::TriangleMesh;
use crate::grad::{ObjectTemplate, ParametricScene, PreparedProblem, SceneParams};
use crate::optimize::{refine, RefineConfig};
use crate::render::{delta_at_peak, IntensityModel, SensorSpec};

/// Sensor-model variants used by the refiner while observations keep the
/// full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    /// Jitter kernel replaced by a unit impulse at its peak.
    DeltaKernel,
    /// Bin width about 13% too small (1.38 cm to 1.2 cm of depth).
    BinSize,
    /// Field of view 32° to 38° with constant laser intensity.
    Fov,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::DeltaKernel, Variant::BinSize, Variant::Fov];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::DeltaKernel => "delta-kernel",
            Variant::BinSize => "bin-size",
            Variant::Fov => "fov",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    pub fn apply(&self, spec: &SensorSpec) -> Result<SensorSpec> {
        Ok(match self {
            Variant::Full => spec.clone(),
            Variant::DeltaKernel => SensorSpec {
                jitter_reference: delta_at_peak(&spec.jitter_kernel()?),
                jitter_scale: 1.0,
                ..spec.clone()
            },
            Variant::BinSize => SensorSpec {
                bin_width_s: spec.bin_width_s * 1.2 / 1.38,
                ..spec.clone()
            },
            Variant::Fov => SensorSpec {
                fov_deg: spec.fov_deg * 38.0 / 32.0,
                intensity_model: IntensityModel::Constant,
                ..spec.clone()
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub variants: Vec<Variant>,
    pub n_scenes: usize,
    pub setup: SceneSetup,
    pub max_rotation_deg: f64,
    pub max_translation: f64,
    pub refine: RefineConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            n_scenes: 10,
            setup: SceneSetup::default(),
            max_rotation_deg: 10.0,
            max_translation: 0.02,
            refine: RefineConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    /// Mean over scenes of the L1 distance between the variant's and the
    /// full model's ground-truth renders, relative to the full model's total.
    pub relative_l1: f64,
    pub adds: Vec<f64>,
    pub median_add: f64,
    pub auc: f64,
}

pub fn ablation_study(mesh: &TriangleMesh, cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    let scene = ParametricScene::new(ObjectTemplate::Mesh(mesh.clone()), Some(cfg.setup.plane.clone()));
    let pts = model_points(mesh);
    cfg.variants
        .iter()
        .map(|&variant| {
            let mut l1 = 0.0;
            let mut adds = Vec::with_capacity(cfg.n_scenes);
            for k in 0..cfg.n_scenes {
                let gt = cfg.setup.posed(mesh, k);
                let rig = cfg.setup.rig(k);
                let observed = PreparedProblem::new(scene.clone(), &rig)?.render(&gt)?;
                let variant_rig = rig.map_specs(|s| variant.apply(s).expect("valid spec"));
                let problem = PreparedProblem::new(scene.clone(), &variant_rig)?;
                let modeled = problem.render(&gt)?;
                let total: f64 = observed.iter().map(|h| h.total()).sum();
                l1 += observed.iter().zip(&modeled).map(|(a, b)| a.l1_distance(b)).sum::<f64>() / total;
                let gt_pose = gt.pose().expect("posed");
                let mut rng = stream_rng(cfg.setup.seed, STREAM_PERTURB + k as u64);
                let init = SceneParams::posed(&perturb_pose(&gt_pose, cfg.max_rotation_deg, cfg.max_translation, &mut rng)?, 1.0, 1.0);
                let res = refine(&problem, &init, &observed, &cfg.refine)?;
                adds.push(compute_add(&res.params.pose().expect("posed"), &gt_pose, &pts)?);
            }
            Ok(AblationRow {
                variant,
                relative_l1: l1 / cfg.n_scenes.max(1) as f64,
                median_add: median(&adds),
                auc: if adds.is_empty() { f64::NAN } else { auc(&adds, AUC_MAX_THRESHOLD)? },
                adds,
            })
        })
        .collect()
}
