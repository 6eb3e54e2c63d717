use rayon::prelude::*;

use super::params::{ObjectTemplate, ParametricScene, SceneParams};
use crate::error::{Error, Result};
use crate::geometry::{Bvh, TriangleMesh};
use crate::render::engine::{combine, jitter, prepare_rig, raw_parts, ObjectGeom, PreparedSensor, RayAssign, Timing};
use crate::render::{Rig, TransientHistogram};
use crate::scalar::{Dual, Real};

/// Rendered histograms with their Jacobian with respect to the scene
/// parameters.
#[derive(Clone, Debug)]
pub struct GradientRecord {
    pub values: Vec<TransientHistogram>,
    /// Per sensor, row-major `[bin][param]`.
    pub jacobian: Vec<Vec<f64>>,
    pub param_names: Vec<&'static str>,
}

impl GradientRecord {
    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn d(&self, sensor: usize, bin: usize, param: usize) -> f64 {
        self.jacobian[sensor][bin * self.n_params() + param]
    }

    /// All sensors' bins stacked as rows `[output][param]`.
    pub fn stacked(&self) -> Vec<Vec<f64>> {
        let n = self.n_params();
        self.jacobian
            .iter()
            .flat_map(|j| j.chunks(n).map(|c| c.to_vec()).collect::<Vec<_>>())
            .collect()
    }
}

/// A parametric scene bound to a rig with all per-sensor precomputation done.
#[derive(Clone, Debug)]
pub struct PreparedProblem {
    pub scene: ParametricScene,
    pub sensors: Vec<PreparedSensor>,
}

/// Convolved per-part histograms (`ρ`-free) of every sensor.
#[derive(Clone, Debug)]
pub struct PartHistograms {
    pub object: Vec<Vec<f64>>,
    pub plane: Vec<Vec<f64>>,
}

impl PreparedProblem {
    pub fn new(scene: ParametricScene, rig: &Rig) -> Result<Self> {
        let sensors = prepare_rig(rig, scene.plane.as_ref())?;
        Ok(Self { scene, sensors })
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn template(&self) -> &ObjectTemplate {
        &self.scene.template
    }

    fn visibility(&self, params: &SceneParams) -> Result<(TriangleMesh, Bvh)> {
        let mesh = self.scene.object_mesh(params)?;
        let bvh = Bvh::build(&mesh);
        Ok((mesh, bvh))
    }

    /// First-hit assignment of every ray of every sensor at `params`.
    pub fn assignments(&self, params: &SceneParams) -> Result<Vec<Vec<RayAssign>>> {
        let (_, bvh) = self.visibility(params)?;
        Ok(self.sensors.par_iter().map(|s| s.assign(Some(&bvh))).collect())
    }

    fn eval<T: Real>(&self, p: &[T], assigns: &[Vec<RayAssign>]) -> Result<Vec<Vec<T>>> {
        let verts = self.scene.template.vertices(p)?;
        let geom = ObjectGeom {
            vertices: &verts,
            triangles: self.scene.template.triangles(),
        };
        let n = p.len();
        let (rho_o, rho_p) = (p[n - 2], p[n - 1]);
        Ok(self
            .sensors
            .par_iter()
            .zip(assigns)
            .map(|(s, a)| {
                let timing = Timing::<T>::from_spec(&s.spec);
                let parts = raw_parts(s, a, Some(&geom), &timing, false);
                let raw = combine(&parts, rho_o, rho_p);
                jitter(s, &raw, &timing, false)
            })
            .collect())
    }

    fn histograms(&self, counts: Vec<Vec<f64>>) -> Vec<TransientHistogram> {
        counts
            .into_iter()
            .zip(&self.sensors)
            .map(|(c, s)| TransientHistogram {
                counts: c,
                bin_width_s: s.spec.bin_width_s,
                sensor_id: s.sensor_id,
            })
            .collect()
    }

    /// Plain rendering at `params`; identical to rendering the equivalent
    /// [`crate::geometry::SceneModel`].
    pub fn render(&self, params: &SceneParams) -> Result<Vec<TransientHistogram>> {
        let assigns = self.assignments(params)?;
        Ok(self.histograms(self.eval(&params.to_vec(), &assigns)?))
    }

    /// Rendering with visibility frozen to `assigns` (the fixed-topology model
    /// the Jacobian differentiates).
    pub fn render_frozen(&self, params: &SceneParams, assigns: &[Vec<RayAssign>]) -> Result<Vec<Vec<f64>>> {
        self.scene.check(params)?;
        self.eval(&params.to_vec(), assigns)
    }

    /// Object-only and plane-only convolved histograms (albedos factored out).
    pub fn render_parts(&self, params: &SceneParams) -> Result<PartHistograms> {
        let assigns = self.assignments(params)?;
        let verts = self.scene.template.vertices::<f64>(&params.to_vec())?;
        let geom = ObjectGeom {
            vertices: &verts,
            triangles: self.scene.template.triangles(),
        };
        let (object, plane) = self
            .sensors
            .par_iter()
            .zip(&assigns)
            .map(|(s, a)| {
                let timing = Timing::<f64>::from_spec(&s.spec);
                let parts = raw_parts(s, a, Some(&geom), &timing, false);
                (
                    jitter(s, &parts.object, &timing, false),
                    jitter(s, &parts.plane, &timing, false),
                )
            })
            .unzip();
        Ok(PartHistograms { object, plane })
    }

    pub fn render_with_grad(&self, params: &SceneParams) -> Result<GradientRecord> {
        match params {
            SceneParams::PosedMesh { .. } => self.grad_n::<11>(params),
            SceneParams::Sphere { .. } => self.grad_n::<6>(params),
        }
    }

    fn grad_n<const N: usize>(&self, params: &SceneParams) -> Result<GradientRecord> {
        let assigns = self.assignments(params)?;
        let p = params.to_vec();
        if p.len() != N {
            return Err(Error::Config("parameter count mismatch".into()));
        }
        let seeded: Vec<Dual<N>> = p.iter().enumerate().map(|(i, &v)| Dual::variable(v, i)).collect();
        let out = self.eval(&seeded, &assigns)?;
        let values = self.histograms(out.iter().map(|h| h.iter().map(|d| d.v).collect()).collect());
        let jacobian = out
            .iter()
            .map(|h| h.iter().flat_map(|d| d.d).collect())
            .collect();
        Ok(GradientRecord {
            values,
            jacobian,
            param_names: params.param_names().to_vec(),
        })
    }
}

/// Renders every sensor of `rig` and differentiates with respect to `params`.
pub fn render_with_grad(params: &SceneParams, scene: &ParametricScene, rig: &Rig) -> Result<GradientRecord> {
    PreparedProblem::new(scene.clone(), rig)?.render_with_grad(params)
}
