use serde::{Deserialize, Serialize};

use super::pose::{derived_seed, perturb_pose, SceneSetup};
use super::{model_points, STREAM_INIT, STREAM_NOISE, STREAM_PERTURB};
use crate::datagen::{perturb_positions, stream_rng};
use crate::error::{Error, Result};
use crate::eval::{compute_add, median};
use crate::geometry::TriangleMesh;
use crate::grad::{ObjectTemplate, ParametricScene, PreparedProblem, SceneParams};
use crate::optimize::{initialize, refine, InitConfig, RefineConfig};

/// Starting point of each refinement in the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepInit {
    /// Ground truth perturbed once per scene, shared by all budgets.
    Perturbed { max_rotation_deg: f64, max_translation: f64 },
    /// Multi-start initialization per budget.
    Search,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewSweepConfig {
    /// Pixel (sensor) counts; rigs are nested, each budget using the first
    /// sensors of one rig sized for the largest budget.
    pub budgets: Vec<usize>,
    pub n_scenes: usize,
    pub setup: SceneSetup,
    /// Observations come from the rig with positions perturbed by this
    /// standard deviation; refinement uses the nominal rig.
    pub position_noise_std: f64,
    pub initialization: SweepInit,
    pub init: InitConfig,
    pub refine: RefineConfig,
}

impl Default for ViewSweepConfig {
    fn default() -> Self {
        Self {
            budgets: vec![5, 10, 15, 25, 50, 100],
            n_scenes: 50,
            setup: SceneSetup::default(),
            position_noise_std: 0.005,
            initialization: SweepInit::Perturbed {
                max_rotation_deg: 10.0,
                max_translation: 0.02,
            },
            init: InitConfig::default(),
            refine: RefineConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ViewSweepRow {
    pub budget: usize,
    /// Per-scene ADD (meters).
    pub adds: Vec<f64>,
    pub median_add: f64,
}

pub fn viewsweep(mesh: &TriangleMesh, cfg: &ViewSweepConfig) -> Result<Vec<ViewSweepRow>> {
    let max_budget = *cfg.budgets.iter().max().ok_or(Error::Empty("view budgets"))?;
    if cfg.budgets.contains(&0) {
        return Err(Error::Config("view budgets must be positive".into()));
    }
    let mut setup = cfg.setup.clone();
    setup.rig.n_sensors = max_budget;
    let scene = ParametricScene::new(ObjectTemplate::Mesh(mesh.clone()), Some(setup.plane.clone()));
    let pts = model_points(mesh);
    let mut adds = vec![Vec::with_capacity(cfg.n_scenes); cfg.budgets.len()];
    for k in 0..cfg.n_scenes {
        let gt = setup.posed(mesh, k);
        let nominal = setup.rig(k);
        let actual = perturb_positions(&nominal, cfg.position_noise_std, &mut stream_rng(setup.seed, STREAM_NOISE + k as u64));
        let observed_all = PreparedProblem::new(scene.clone(), &actual)?.render(&gt)?;
        let gt_pose = gt.pose().expect("posed");
        let shared_init = match &cfg.initialization {
            SweepInit::Perturbed { max_rotation_deg, max_translation } => {
                let mut rng = stream_rng(setup.seed, STREAM_PERTURB + k as u64);
                Some(SceneParams::posed(&perturb_pose(&gt_pose, *max_rotation_deg, *max_translation, &mut rng)?, 1.0, 1.0))
            }
            SweepInit::Search => None,
        };
        for (b, &budget) in cfg.budgets.iter().enumerate() {
            let rig = nominal.truncated(budget);
            let observed = &observed_all[..budget];
            let problem = PreparedProblem::new(scene.clone(), &rig)?;
            let init = match &shared_init {
                Some(p) => p.clone(),
                None => {
                    let init_cfg = InitConfig {
                        seed: derived_seed(cfg.init.seed, STREAM_INIT + k as u64),
                        workspace: setup.workspace.clone(),
                        ..cfg.init.clone()
                    };
                    initialize(&scene, &rig, observed, &init_cfg, &cfg.refine)?.params
                }
            };
            let res = refine(&problem, &init, observed, &cfg.refine)?;
            adds[b].push(compute_add(&res.params.pose().expect("posed"), &gt_pose, &pts)?);
        }
    }
    Ok(cfg
        .budgets
        .iter()
        .zip(adds)
        .map(|(&budget, adds)| ViewSweepRow {
            budget,
            median_add: median(&adds),
            adds,
        })
        .collect())
}
