use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::albedo::fit_albedos;
use super::loss::histogram_loss;
use super::refine::{check_observed, refine, RefineConfig};
use crate::datagen::{sample_object_pose, sample_sphere, stream_rng, Workspace};
use crate::error::{Error, Result};
use crate::datagen::drop_to_plane;
use crate::geometry::{Plane, Pose6D};
use crate::grad::{ObjectTemplate, ParametricScene, PreparedProblem, SceneParams};
use crate::render::{Rig, TransientHistogram};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub n_candidates: usize,
    pub n_survivors: usize,
    pub short_refine_steps: usize,
    pub workspace: Workspace,
    pub seed: u64,
    /// Ray grid used to rank candidates (per side).
    pub rank_grid: usize,
    pub sphere_diameter_range: (f64, f64),
    /// Rounds of discrete flip search applied to the winner (meshes only).
    pub flip_rounds: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            n_candidates: 512,
            n_survivors: 8,
            short_refine_steps: 25,
            workspace: Workspace::default(),
            seed: 0,
            rank_grid: 24,
            sphere_diameter_range: (0.04, 0.30),
            flip_rounds: 2,
        }
    }
}

impl InitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 || self.n_survivors == 0 {
            return Err(Error::Config("n_candidates and n_survivors must be at least 1".into()));
        }
        if self.n_survivors > self.n_candidates {
            return Err(Error::Config("n_survivors must not exceed n_candidates".into()));
        }
        if self.rank_grid == 0 {
            return Err(Error::Config("rank_grid must be at least 1".into()));
        }
        let (lo, hi) = self.sphere_diameter_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config("invalid sphere diameter range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitResult {
    pub params: SceneParams,
    /// Full-resolution loss of `params`.
    pub loss: f64,
    /// Ranking loss of every candidate (albedos fitted in closed form).
    pub candidate_losses: Vec<f64>,
    /// Indices of the short-refined candidates, best ranked first.
    pub survivors: Vec<usize>,
    /// Candidate the returned parameters were refined from.
    pub chosen: usize,
}

/// Candidate `index` of the multi-start draw (albedos set to 1).
pub fn sample_candidate(template: &ObjectTemplate, plane: &Plane, cfg: &InitConfig, index: usize) -> SceneParams {
    let mut rng = stream_rng(cfg.seed, index as u64);
    match template {
        ObjectTemplate::Mesh(mesh) => SceneParams::posed(&sample_object_pose(mesh, &cfg.workspace, plane, &mut rng), 1.0, 1.0),
        ObjectTemplate::Sphere(_) => {
            let (c, d) = sample_sphere(&cfg.workspace, plane, cfg.sphere_diameter_range, &mut rng);
            SceneParams::sphere(c, d, 1.0, 1.0)
        }
    }
}

/// Half turns about the object's coordinate axes, face diagonals and body
/// diagonals, and quarter turns about the vertical (the near-symmetries a
/// coarse multi-start most often lands in), each on a small grid of planar
/// offsets.
fn flip_variants(mesh: &crate::geometry::TriangleMesh, plane: &Plane, pose: &Pose6D) -> Result<Vec<Pose6D>> {
    use nalgebra::{Rotation3, Unit, Vector3};
    use std::f64::consts::{FRAC_PI_2, PI};
    let r = pose.rotation()?;
    let t = pose.t();
    let axes = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ];
    let mut rots: Vec<_> = axes
        .iter()
        .map(|a| r * Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(*a)), PI).into_inner())
        .collect();
    for k in 1..4 {
        rots.push(Rotation3::from_axis_angle(&Vector3::z_axis(), k as f64 * FRAC_PI_2).into_inner() * r);
    }
    let shifts = [-0.03, -0.015, 0.0, 0.015, 0.03];
    let mut out = Vec::with_capacity(rots.len() * shifts.len() * shifts.len());
    for rot in rots {
        let z = drop_to_plane(mesh, &rot, plane);
        for dx in shifts {
            for dy in shifts {
                out.push(Pose6D::from_rt(&rot, &Vector3::new(t.x + dx, t.y + dy, z)));
            }
        }
    }
    Ok(out)
}

/// Ranking loss of `params` on `problem` with albedos fitted in closed form.
fn fitted_loss(
    problem: &PreparedProblem,
    params: &SceneParams,
    observed: &[TransientHistogram],
    cfg: &RefineConfig,
) -> Result<(f64, SceneParams)> {
    let parts = problem.render_parts(params)?;
    let (ro, rp) = fit_albedos(&parts, observed);
    let fitted = params.with_albedos(ro, rp);
    let rendered = problem.render(&fitted)?;
    let loss = histogram_loss(&rendered, observed, cfg.loss_norm, cfg.normalize);
    Ok((if loss.is_finite() { loss } else { f64::INFINITY }, fitted))
}

fn short_refine(
    problem: &PreparedProblem,
    start: &SceneParams,
    observed: &[TransientHistogram],
    cfg: &RefineConfig,
) -> Result<(f64, SceneParams)> {
    match refine(problem, start, observed, cfg) {
        Ok(r) => Ok((r.loss, r.params)),
        Err(Error::Diverged { .. }) => Ok((f64::INFINITY, start.clone())),
        Err(e) => Err(e),
    }
}

/// Best short-refined flip of `params`, screening all variants on the
/// coarse problem first.
#[allow(clippy::too_many_arguments)]
fn best_flip(
    full: &PreparedProblem,
    coarse: &PreparedProblem,
    mesh: &crate::geometry::TriangleMesh,
    plane: &Plane,
    params: &SceneParams,
    observed: &[TransientHistogram],
    n_keep: usize,
    cfg: &RefineConfig,
) -> Result<Option<(f64, SceneParams)>> {
    let Some(pose) = params.pose() else { return Ok(None) };
    let (ro, rp) = params.albedos();
    let screened: Vec<(f64, SceneParams)> = flip_variants(mesh, plane, &pose)?
        .par_iter()
        .map(|v| fitted_loss(coarse, &SceneParams::posed(v, ro, rp), observed, cfg))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..screened.len()).collect();
    order.sort_by(|&a, &b| screened[a].0.total_cmp(&screened[b].0).then(a.cmp(&b)));
    let refined: Vec<(f64, SceneParams)> = order
        .into_iter()
        .take(n_keep)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| short_refine(full, &screened[i].1, observed, cfg))
        .collect::<Result<_>>()?;
    Ok(refined.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)))
}

/// Multi-start initialization: rank random physically placed candidates by
/// the reconstruction loss, short-refine the best few and return the winner.
pub fn initialize(
    scene: &ParametricScene,
    rig: &Rig,
    observed: &[TransientHistogram],
    cfg: &InitConfig,
    refine_cfg: &RefineConfig,
) -> Result<InitResult> {
    cfg.validate()?;
    let plane = scene.plane.clone().unwrap_or_default();
    let full = PreparedProblem::new(scene.clone(), rig)?;
    check_observed(&full, observed)?;
    let coarse_rig = rig.map_specs(|s| s.clone().with_grid(cfg.rank_grid, cfg.rank_grid));
    let coarse = PreparedProblem::new(scene.clone(), &coarse_rig)?;

    let candidates: Vec<SceneParams> = (0..cfg.n_candidates)
        .map(|i| sample_candidate(&scene.template, &plane, cfg, i))
        .collect();
    let ranked: Vec<(f64, SceneParams)> = candidates
        .par_iter()
        .map(|c| fitted_loss(&coarse, c, observed, refine_cfg))
        .collect::<Result<_>>()?;
    let candidate_losses: Vec<f64> = ranked.iter().map(|r| r.0).collect();
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    order.sort_by(|&a, &b| candidate_losses[a].total_cmp(&candidate_losses[b]).then(a.cmp(&b)));
    let survivors: Vec<usize> = order.into_iter().take(cfg.n_survivors).collect();

    let short_cfg = RefineConfig {
        steps: cfg.short_refine_steps.max(1),
        fit_initial_albedos: false,
        ..refine_cfg.clone()
    };
    let refined: Vec<(f64, SceneParams)> = survivors
        .par_iter()
        .map(|&i| short_refine(&full, &ranked[i].1, observed, &short_cfg))
        .collect::<Result<_>>()?;
    let best = (0..refined.len())
        .min_by(|&a, &b| refined[a].0.total_cmp(&refined[b].0).then(a.cmp(&b)))
        .expect("at least one survivor");
    let (mut loss, mut params) = refined[best].clone();
    if let ObjectTemplate::Mesh(mesh) = &scene.template {
        for _ in 0..cfg.flip_rounds {
            let found = best_flip(&full, &coarse, mesh, &plane, &params, observed, cfg.n_survivors, &short_cfg)?;
            let Some((l, p)) = found else {
                break;
            };
            if l >= loss {
                break;
            }
            (loss, params) = (l, p);
        }
    }
    Ok(InitResult {
        params,
        loss,
        candidate_losses,
        chosen: survivors[best],
        survivors,
    })
}
