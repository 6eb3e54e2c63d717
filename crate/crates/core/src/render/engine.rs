//! The shared forward model.
//!
//! Visibility (which triangle or plane each ray hits first) is resolved in
//! plain `f64`; shading, soft binning and jitter are generic over [`Real`] so
//! that the same code produces values and derivatives.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::binning::accumulate_soft;
use super::histogram::TransientHistogram;
use super::jitter::convolve_shift;
use super::rays::{SensorFrame, SensorPose};
use super::rig::Rig;
use super::spec::SensorSpec;
use crate::error::Result;
use crate::geometry::{Bvh, Plane, SceneModel};
use crate::scalar::{Real, V3};

/// First-hit classification of one ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayAssign {
    Miss,
    Plane,
    Object(u32),
}

/// Plane hit of one ray: distance and the clamped cosine term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneHit {
    pub t: f64,
    pub cos: f64,
}

/// A sensor's ray bundle together with its (fixed) plane hits and kernel.
#[derive(Clone, Debug)]
pub struct PreparedSensor {
    pub frame: SensorFrame,
    pub plane_hits: Vec<Option<PlaneHit>>,
    pub kernel: Vec<f64>,
    pub spec: SensorSpec,
    pub sensor_id: usize,
}

impl PreparedSensor {
    pub fn new(spec: &SensorSpec, pose: &SensorPose, plane: Option<&Plane>, sensor_id: usize) -> Result<Self> {
        spec.validate()?;
        let frame = SensorFrame::new(spec, pose);
        let plane_hits = plane_hits(&frame, plane);
        Ok(Self {
            frame,
            plane_hits,
            kernel: spec.jitter_kernel()?,
            spec: spec.clone(),
            sensor_id,
        })
    }

    /// Resolves first hits against the object BVH and the plane.
    pub fn assign(&self, object: Option<&Bvh>) -> Vec<RayAssign> {
        (0..self.frame.len())
            .map(|r| {
                let plane_t = self.plane_hits[r].map(|p| p.t);
                let limit = plane_t.unwrap_or(f64::INFINITY);
                let obj = object
                    .and_then(|b| b.intersect(&self.frame.ray(r), limit))
                    .filter(|h| plane_t.is_none_or(|pt| h.t < pt));
                match (obj, plane_t) {
                    (Some(h), _) => RayAssign::Object(h.triangle as u32),
                    (None, Some(_)) => RayAssign::Plane,
                    (None, None) => RayAssign::Miss,
                }
            })
            .collect()
    }
}

/// Prepares every sensor of a rig for a scene with the given plane.
pub fn prepare_rig(rig: &Rig, plane: Option<&Plane>) -> Result<Vec<PreparedSensor>> {
    rig.validate()?;
    rig.sensors
        .par_iter()
        .enumerate()
        .map(|(i, s)| PreparedSensor::new(rig.spec_for(i), &s.pose, plane, s.id))
        .collect()
}

fn plane_hits(frame: &SensorFrame, plane: Option<&Plane>) -> Vec<Option<PlaneHit>> {
    let Some(plane) = plane else {
        return vec![None; frame.len()];
    };
    let n = plane.unit_normal();
    (0..frame.len())
        .map(|r| {
            let ray = frame.ray(r);
            plane.intersect(&ray).map(|t| PlaneHit {
                t,
                cos: (-ray.direction.dot(&n)).max(0.0),
            })
        })
        .collect()
}

/// Object geometry in scalar type `T` (vertices) with its topology.
pub(crate) struct ObjectGeom<'a, T> {
    pub vertices: &'a [V3<T>],
    pub triangles: &'a [[usize; 3]],
}

/// Timing parameters possibly carrying derivatives.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Timing<T> {
    pub bin_width: T,
    pub offset_bins: T,
    pub jitter_scale: T,
}

impl<T: Real> Timing<T> {
    pub fn from_spec(spec: &SensorSpec) -> Self {
        Self {
            bin_width: T::cst(spec.bin_width_s),
            offset_bins: T::cst(spec.temporal_offset_bins),
            jitter_scale: T::cst(spec.jitter_scale),
        }
    }
}

/// Raw (pre-jitter) histogram split into the per-part contributions with the
/// albedo factored out: `N = ρ_obj * object + ρ_plane * plane`.
#[derive(Clone, Debug)]
pub(crate) struct RawParts<T> {
    pub object: Vec<T>,
    pub plane: Vec<T>,
}

/// Shading of a single object hit: `(weight, arrival time)`, or `None` when
/// the frozen triangle faces away from the ray.
#[inline]
fn shade_object<T: Real>(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    w: f64,
    tri: [V3<T>; 3],
    two_over_c: f64,
) -> Option<(T, T)> {
    let [v0, v1, v2] = tri;
    let n = (v1 - v0).cross(&(v2 - v0));
    let d = V3::lift(dir);
    let denom = n.dot(&d);
    let nn = n.norm();
    let cos = -denom / nn;
    if !(cos.value() > 0.0) {
        return None;
    }
    let t = n.dot(&(v0 - V3::lift(origin))) / denom;
    if !(t.value() > 0.0) {
        return None;
    }
    let weight = cos / (t * t) * T::cst(w);
    Some((weight, t.scale(two_over_c)))
}

/// Raw per-part histograms for one sensor under a fixed ray assignment.
///
/// `plane_grad` selects whether plane-ray binning must be carried in `T`
/// (only when the bin width itself is differentiated).
pub(crate) fn raw_parts<T: Real>(
    sensor: &PreparedSensor,
    assign: &[RayAssign],
    object: Option<&ObjectGeom<'_, T>>,
    timing: &Timing<T>,
    plane_grad: bool,
) -> RawParts<T> {
    let spec = &sensor.spec;
    let n_bins = spec.n_bins;
    let k = spec.soft_bin_k;
    let two_over_c = 2.0 / spec.speed_of_light;
    let frame = &sensor.frame;
    let mut obj_hist = vec![T::zero(); n_bins];
    let mut plane_hist_t = vec![T::zero(); if plane_grad { n_bins } else { 0 }];
    let mut plane_hist = vec![0.0f64; if plane_grad { 0 } else { n_bins }];
    let dt_v = timing.bin_width.value();
    for (r, a) in assign.iter().enumerate() {
        match *a {
            RayAssign::Miss => {}
            RayAssign::Plane => {
                let Some(hit) = sensor.plane_hits[r] else { continue };
                if hit.cos <= 0.0 {
                    continue;
                }
                let weight = frame.weights[r] * hit.cos / (hit.t * hit.t);
                let tau = hit.t * two_over_c;
                if plane_grad {
                    accumulate_soft(&mut plane_hist_t, T::cst(weight), T::cst(tau), timing.bin_width, k);
                } else {
                    accumulate_soft(&mut plane_hist, weight, tau, dt_v, k);
                }
            }
            RayAssign::Object(tri) => {
                let Some(obj) = object else { continue };
                let [a, b, c] = obj.triangles[tri as usize];
                let tri = [obj.vertices[a], obj.vertices[b], obj.vertices[c]];
                if let Some((weight, tau)) = shade_object(
                    &frame.origin,
                    &frame.world_dirs[r],
                    frame.weights[r],
                    tri,
                    two_over_c,
                ) {
                    accumulate_soft(&mut obj_hist, weight, tau, timing.bin_width, k);
                }
            }
        }
    }
    let plane = if plane_grad {
        plane_hist_t
    } else {
        plane_hist.into_iter().map(T::cst).collect()
    };
    RawParts {
        object: obj_hist,
        plane,
    }
}

/// Combines parts with albedos: `ρ_obj * object + ρ_plane * plane`.
pub(crate) fn combine<T: Real>(parts: &RawParts<T>, rho_obj: T, rho_plane: T) -> Vec<T> {
    parts
        .object
        .iter()
        .zip(&parts.plane)
        .map(|(o, p)| rho_obj * *o + rho_plane * *p)
        .collect()
}

/// Jitter + offset stage over `T`, using the sensor's kernel unless the
/// timing carries a differentiated resampling factor.
pub(crate) fn jitter<T: Real>(
    sensor: &PreparedSensor,
    raw: &[T],
    timing: &Timing<T>,
    kernel_grad: bool,
) -> Vec<T> {
    if kernel_grad {
        let kernel = super::jitter::resample_kernel_generic(&sensor.spec.jitter_reference, timing.jitter_scale);
        convolve_shift(raw, &kernel, timing.offset_bins)
    } else {
        let kernel: Vec<T> = sensor.kernel.iter().map(|&k| T::cst(k)).collect();
        convolve_shift(raw, &kernel, timing.offset_bins)
    }
}

pub(crate) fn lift_mesh_vertices<T: Real>(scene: &SceneModel) -> Vec<V3<T>> {
    scene
        .object()
        .map(|m| m.vertices().iter().map(V3::lift).collect())
        .unwrap_or_default()
}

/// Plain `f64` raw parts for a scene, resolving visibility against the
/// scene's own BVH.
pub(crate) fn scene_raw_parts(sensor: &PreparedSensor, scene: &SceneModel) -> (Vec<RayAssign>, RawParts<f64>) {
    let assign = sensor.assign(scene.object_bvh());
    let verts = lift_mesh_vertices::<f64>(scene);
    let geom = scene.object().map(|m| ObjectGeom {
        vertices: &verts,
        triangles: m.triangles(),
    });
    let timing = Timing::from_spec(&sensor.spec);
    let parts = raw_parts(sensor, &assign, geom.as_ref(), &timing, false);
    (assign, parts)
}

/// Pre-jitter expected photon counts for one prepared sensor.
pub fn render_prepared_raw(sensor: &PreparedSensor, scene: &SceneModel) -> TransientHistogram {
    let (_, parts) = scene_raw_parts(sensor, scene);
    TransientHistogram {
        counts: combine(&parts, scene.albedo_object(), scene.albedo_plane()),
        bin_width_s: sensor.spec.bin_width_s,
        sensor_id: sensor.sensor_id,
    }
}

/// Full forward model for one prepared sensor.
pub fn render_prepared(sensor: &PreparedSensor, scene: &SceneModel) -> TransientHistogram {
    let raw = render_prepared_raw(sensor, scene);
    let timing = Timing::<f64>::from_spec(&sensor.spec);
    TransientHistogram {
        counts: jitter(sensor, &raw.counts, &timing, false),
        ..raw
    }
}

/// Pre-jitter histogram `N` of one sensor.
pub fn render_raw(scene: &SceneModel, spec: &SensorSpec, pose: &SensorPose) -> Result<TransientHistogram> {
    let sensor = PreparedSensor::new(spec, pose, scene.plane(), 0)?;
    Ok(render_prepared_raw(&sensor, scene))
}

/// Expected transient histogram of one sensor: jitter and offset applied to
/// the raw rendering.
pub fn render(scene: &SceneModel, spec: &SensorSpec, pose: &SensorPose) -> Result<TransientHistogram> {
    let sensor = PreparedSensor::new(spec, pose, scene.plane(), 0)?;
    Ok(render_prepared(&sensor, scene))
}

/// Renders every sensor of a rig (parallel over sensors, order preserved).
pub fn render_rig(scene: &SceneModel, rig: &Rig) -> Result<Vec<TransientHistogram>> {
    let prepared = prepare_rig(rig, scene.plane())?;
    Ok(prepared.par_iter().map(|s| render_prepared(s, scene)).collect())
}
