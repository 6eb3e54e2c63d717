use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{model_points, STREAM_INIT, STREAM_PERTURB, STREAM_RIG, STREAM_SCENE};
use crate::datagen::{sample_object_pose, sample_rig, sample_sphere, stream_rng, RigSampling, Workspace};
use crate::error::Result;
use crate::eval::{compute_add, compute_add_s};
use crate::geometry::{Plane, Pose6D, TriangleMesh};
use crate::grad::{
    default_fd_steps, finite_diff_jacobian, jacobian_discrepancy, ObjectTemplate, ParametricScene, PreparedProblem,
    SceneParams,
};
use crate::optimize::{initialize, refine, InitConfig, RefineConfig};
use crate::render::{Rig, SensorSpec, TransientHistogram};

/// Rotates `pose` by a uniformly random axis and an angle uniform in
/// `[0, max_rotation_deg]`, and shifts it by a uniformly random direction
/// and a distance uniform in `[0, max_translation]`.
pub fn perturb_pose<R: Rng + ?Sized>(pose: &Pose6D, max_rotation_deg: f64, max_translation: f64, rng: &mut R) -> Result<Pose6D> {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = rng.random_range(0.0..=max_rotation_deg).to_radians();
    let dir: [f64; 3] = UnitSphere.sample(rng);
    let dist = rng.random_range(0.0..=max_translation);
    let dr = UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector3::from(axis)), angle);
    let r = dr.to_rotation_matrix().into_inner() * pose.rotation()?;
    Ok(Pose6D::from_rt(&r, &(pose.t() + Vector3::from(dir) * dist)))
}

pub(crate) fn derived_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}

/// Shared scene/rig setup of the pose studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSetup {
    pub seed: u64,
    pub workspace: Workspace,
    pub plane: Plane,
    pub rig: RigSampling,
    pub spec: SensorSpec,
    pub albedo_range: (f64, f64),
}

impl Default for SceneSetup {
    fn default() -> Self {
        Self {
            seed: 0,
            workspace: Workspace::default(),
            plane: Plane::default(),
            rig: RigSampling::default(),
            spec: SensorSpec::default(),
            albedo_range: (0.3, 1.0),
        }
    }
}

impl SceneSetup {
    pub fn rig(&self, k: usize) -> Rig {
        sample_rig(&self.rig, &self.workspace, &self.spec, &mut stream_rng(self.seed, STREAM_RIG + k as u64))
    }

    pub fn posed(&self, mesh: &TriangleMesh, k: usize) -> SceneParams {
        let mut rng = stream_rng(self.seed, STREAM_SCENE + k as u64);
        let pose = sample_object_pose(mesh, &self.workspace, &self.plane, &mut rng);
        let (lo, hi) = self.albedo_range;
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(lo..=hi);
        SceneParams::posed(&pose, a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseStudyConfig {
    pub n_trials: usize,
    pub setup: SceneSetup,
    pub refine: RefineConfig,
    pub max_rotation_deg: f64,
    pub max_translation: f64,
}

impl Default for PoseStudyConfig {
    fn default() -> Self {
        Self {
            n_trials: 20,
            setup: SceneSetup::default(),
            refine: RefineConfig::default(),
            max_rotation_deg: 10.0,
            max_translation: 0.02,
        }
    }
}

/// Outcome of one posed-mesh trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub ground_truth: SceneParams,
    pub init: SceneParams,
    pub result: SceneParams,
    pub init_add: f64,
    pub final_add: f64,
    pub final_add_s: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

fn finish_trial(
    index: usize,
    mesh: &TriangleMesh,
    gt: &SceneParams,
    init: SceneParams,
    problem: &PreparedProblem,
    observed: &[TransientHistogram],
    refine_cfg: &RefineConfig,
) -> Result<Trial> {
    let res = refine(problem, &init, observed, refine_cfg)?;
    let pts = model_points(mesh);
    let gt_pose = gt.pose().expect("posed");
    Ok(Trial {
        index,
        init_add: compute_add(&init.pose().expect("posed"), &gt_pose, &pts)?,
        final_add: compute_add(&res.params.pose().expect("posed"), &gt_pose, &pts)?,
        final_add_s: compute_add_s(&res.params.pose().expect("posed"), &gt_pose, &pts)?,
        initial_loss: res.loss_trace[0],
        final_loss: res.loss,
        ground_truth: gt.clone(),
        init,
        result: res.params,
    })
}

/// Refinement from ground truth perturbed by at most the configured rotation
/// and translation, on noise-free renders.
pub fn pose_refinement_study(mesh: &TriangleMesh, cfg: &PoseStudyConfig) -> Result<Vec<Trial>> {
    let scene = ParametricScene::new(ObjectTemplate::Mesh(mesh.clone()), Some(cfg.setup.plane.clone()));
    (0..cfg.n_trials)
        .map(|k| {
            let gt = cfg.setup.posed(mesh, k);
            let problem = PreparedProblem::new(scene.clone(), &cfg.setup.rig(k))?;
            let observed = problem.render(&gt)?;
            let mut rng = stream_rng(cfg.setup.seed, STREAM_PERTURB + k as u64);
            let pose = perturb_pose(&gt.pose().expect("posed"), cfg.max_rotation_deg, cfg.max_translation, &mut rng)?;
            finish_trial(k, mesh, &gt, SceneParams::posed(&pose, 1.0, 1.0), &problem, &observed, &cfg.refine)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndToEndConfig {
    pub n_scenes: usize,
    pub setup: SceneSetup,
    pub init: InitConfig,
    pub refine: RefineConfig,
}

impl Default for EndToEndConfig {
    fn default() -> Self {
        Self {
            n_scenes: 20,
            setup: SceneSetup::default(),
            init: InitConfig::default(),
            refine: RefineConfig::default(),
        }
    }
}

/// Multi-start initialization followed by refinement, on noise-free renders.
pub fn end_to_end_study(mesh: &TriangleMesh, cfg: &EndToEndConfig) -> Result<Vec<Trial>> {
    let scene = ParametricScene::new(ObjectTemplate::Mesh(mesh.clone()), Some(cfg.setup.plane.clone()));
    (0..cfg.n_scenes)
        .map(|k| {
            let gt = cfg.setup.posed(mesh, k);
            let rig = cfg.setup.rig(k);
            let problem = PreparedProblem::new(scene.clone(), &rig)?;
            let observed = problem.render(&gt)?;
            let init_cfg = InitConfig {
                seed: derived_seed(cfg.init.seed, STREAM_INIT + k as u64),
                workspace: cfg.setup.workspace.clone(),
                ..cfg.init.clone()
            };
            let init = initialize(&scene, &rig, &observed, &init_cfg, &cfg.refine)?;
            finish_trial(k, mesh, &gt, init.params, &problem, &observed, &cfg.refine)
        })
        .collect()
}

/// How sphere trials are initialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereInit {
    /// Multi-start initialization.
    Search,
    /// Ground truth with the diameter off by this much (meters); the center
    /// keeps resting on the plane.
    DiameterOffset { offset: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SphereStudyConfig {
    /// Diameters are evenly spaced over the range, one per trial.
    pub n_trials: usize,
    pub diameter_range: (f64, f64),
    pub tessellation_level: u32,
    pub setup: SceneSetup,
    pub initialization: SphereInit,
    pub init: InitConfig,
    pub refine: RefineConfig,
}

impl Default for SphereStudyConfig {
    fn default() -> Self {
        Self {
            n_trials: 10,
            diameter_range: (0.06, 0.24),
            tessellation_level: 4,
            setup: SceneSetup::default(),
            initialization: SphereInit::Search,
            init: InitConfig::default(),
            refine: RefineConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereTrial {
    pub index: usize,
    pub ground_truth: SceneParams,
    pub init: SceneParams,
    pub result: SceneParams,
    pub diameter_error: f64,
    pub center_error: f64,
    pub final_loss: f64,
}

fn sphere_parts(p: &SceneParams) -> (Vector3<f64>, f64) {
    match p {
        SceneParams::Sphere { center, diameter, .. } => (Vector3::from(*center), *diameter),
        _ => unreachable!("sphere study parameters"),
    }
}

pub fn sphere_study(cfg: &SphereStudyConfig) -> Result<Vec<SphereTrial>> {
    let scene = ParametricScene::new(ObjectTemplate::sphere(cfg.tessellation_level)?, Some(cfg.setup.plane.clone()));
    (0..cfg.n_trials)
        .map(|k| {
            let (lo, hi) = cfg.diameter_range;
            let d = if cfg.n_trials > 1 { lo + (hi - lo) * k as f64 / (cfg.n_trials - 1) as f64 } else { lo };
            let mut rng = stream_rng(cfg.setup.seed, STREAM_SCENE + k as u64);
            let (c, _) = sample_sphere(&cfg.setup.workspace, &cfg.setup.plane, (d, d), &mut rng);
            let (alo, ahi) = cfg.setup.albedo_range;
            let gt = SceneParams::sphere(c, d, rng.random_range(alo..=ahi), rng.random_range(alo..=ahi));
            let rig = cfg.setup.rig(k);
            let problem = PreparedProblem::new(scene.clone(), &rig)?;
            let observed = problem.render(&gt)?;
            let init = match &cfg.initialization {
                SphereInit::Search => {
                    let init_cfg = InitConfig {
                        seed: derived_seed(cfg.init.seed, STREAM_INIT + k as u64),
                        workspace: cfg.setup.workspace.clone(),
                        ..cfg.init.clone()
                    };
                    initialize(&scene, &rig, &observed, &init_cfg, &cfg.refine)?.params
                }
                SphereInit::DiameterOffset { offset } => {
                    let d0 = (d + offset).max(0.01);
                    let c0 = Vector3::new(c.x, c.y, cfg.setup.plane.origin[2] + d0 / 2.0);
                    SceneParams::sphere(c0, d0, 1.0, 1.0)
                }
            };
            let res = refine(&problem, &init, &observed, &cfg.refine)?;
            let (cr, dr) = sphere_parts(&res.params);
            Ok(SphereTrial {
                index: k,
                diameter_error: (dr - d).abs(),
                center_error: (cr - c).norm(),
                final_loss: res.loss,
                ground_truth: gt,
                init,
                result: res.params,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckConfig {
    pub n_posed: usize,
    pub n_sphere: usize,
    pub tessellation_level: u32,
    pub setup: SceneSetup,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            n_posed: 10,
            n_sphere: 10,
            tessellation_level: 3,
            setup: SceneSetup::default(),
        }
    }
}

/// Worst discrepancy of one parameter of one scene.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradCheckRow {
    pub scene: String,
    pub param: String,
    pub abs_error: f64,
    pub rel_error: f64,
}

fn check_scene(label: String, problem: &PreparedProblem, params: &SceneParams) -> Result<Vec<GradCheckRow>> {
    let record = problem.render_with_grad(params)?;
    let assigns = problem.assignments(params)?;
    let fd = finite_diff_jacobian(
        |p| {
            problem
                .render_frozen(&params.with_vec(p), &assigns)
                .expect("valid parameters")
                .concat()
        },
        &params.to_vec(),
        &default_fd_steps(params),
    );
    Ok(jacobian_discrepancy(&record.stacked(), &fd)
        .into_iter()
        .zip(record.param_names)
        .map(|((abs_error, rel_error), name)| GradCheckRow {
            scene: label.clone(),
            param: name.to_string(),
            abs_error,
            rel_error,
        })
        .collect())
}

/// Forward-mode Jacobians against central differences under frozen
/// visibility, on random posed-mesh and sphere scenes.
pub fn gradient_check_study(mesh: &TriangleMesh, cfg: &GradCheckConfig) -> Result<Vec<GradCheckRow>> {
    let setup = &cfg.setup;
    let mesh_scene = ParametricScene::new(ObjectTemplate::Mesh(mesh.clone()), Some(setup.plane.clone()));
    let sphere_scene = ParametricScene::new(ObjectTemplate::sphere(cfg.tessellation_level)?, Some(setup.plane.clone()));
    let posed = (0..cfg.n_posed).into_par_iter().map(|k| {
        let problem = PreparedProblem::new(mesh_scene.clone(), &setup.rig(k))?;
        check_scene(format!("posed_{k}"), &problem, &setup.posed(mesh, k))
    });
    let spheres = (0..cfg.n_sphere).into_par_iter().map(|k| {
        let mut rng = stream_rng(setup.seed, STREAM_SCENE + k as u64);
        let (c, d) = sample_sphere(&setup.workspace, &setup.plane, (0.06, 0.24), &mut rng);
        let (lo, hi) = setup.albedo_range;
        let params = SceneParams::sphere(c, d, rng.random_range(lo..=hi), rng.random_range(lo..=hi));
        let problem = PreparedProblem::new(sphere_scene.clone(), &setup.rig(k))?;
        check_scene(format!("sphere_{k}"), &problem, &params)
    });
    let rows: Vec<Vec<GradCheckRow>> = posed.chain(spheres).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}
