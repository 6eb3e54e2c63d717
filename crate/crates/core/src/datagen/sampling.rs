use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::rotation::{axis_angle, random_rotation};
use crate::geometry::{Plane, Pose6D, TriangleMesh};
use crate::render::{Rig, SensorPose, SensorSpec};

/// Tabletop workspace: objects are centered within `radius` of `center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Workspace {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Self {
            center: [0.0, 0.0, 0.0],
            radius: 0.15,
        }
    }
}

impl Workspace {
    pub fn center(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }

    /// Uniform point in the horizontal disk about the center.
    pub fn sample_xy<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let r = self.radius * rng.random::<f64>().sqrt();
        let phi = rng.random_range(0.0..2.0 * PI);
        (self.center[0] + r * phi.cos(), self.center[1] + r * phi.sin())
    }
}

/// Height offset along the plane normal that puts the lowest vertex of
/// `rotation * mesh` exactly on the plane (horizontal planes).
pub fn drop_to_plane(mesh: &TriangleMesh, rotation: &Matrix3<f64>, plane: &Plane) -> f64 {
    let min_z = mesh
        .vertices()
        .iter()
        .map(|v| (rotation * v).z)
        .fold(f64::INFINITY, f64::min);
    plane.origin[2] - min_z
}

/// Uniform rotation, uniform planar position in the workspace disk, and the
/// height at which the lowest vertex touches the plane.
pub fn sample_object_pose<R: Rng + ?Sized>(
    template: &TriangleMesh,
    workspace: &Workspace,
    plane: &Plane,
    rng: &mut R,
) -> Pose6D {
    let rot = random_rotation(rng);
    let (x, y) = workspace.sample_xy(rng);
    let z = drop_to_plane(template, &rot, plane);
    Pose6D::from_rt(&rot, &Vector3::new(x, y, z))
}

/// Sphere resting on the plane: `(center, diameter)` with the diameter
/// log-uniform in `diameter_range`.
pub fn sample_sphere<R: Rng + ?Sized>(
    workspace: &Workspace,
    plane: &Plane,
    diameter_range: (f64, f64),
    rng: &mut R,
) -> (Vector3<f64>, f64) {
    let (lo, hi) = diameter_range;
    let d = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    let (x, y) = workspace.sample_xy(rng);
    (Vector3::new(x, y, plane.origin[2] + d / 2.0), d)
}

/// Rig sampling: positions uniform (by volume) in a spherical shell above the
/// plane, optical axes aimed at the workspace center with a uniform angular
/// jitter inside a cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigSampling {
    pub n_sensors: usize,
    pub min_range: f64,
    pub max_range: f64,
    pub max_jitter_deg: f64,
    /// Lowest admissible sensor height above the plane (meters).
    pub min_height: f64,
}

impl Default for RigSampling {
    fn default() -> Self {
        Self {
            n_sensors: 15,
            min_range: 0.30,
            max_range: 0.80,
            max_jitter_deg: 15.0,
            min_height: 0.10,
        }
    }
}

fn any_perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let helper = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    helper.cross(v).normalize()
}

pub fn sample_rig<R: Rng + ?Sized>(
    cfg: &RigSampling,
    workspace: &Workspace,
    spec: &SensorSpec,
    rng: &mut R,
) -> Rig {
    let center = workspace.center();
    let (r0, r1) = (cfg.min_range.powi(3), cfg.max_range.powi(3));
    let cos_max = cfg.max_jitter_deg.to_radians().cos();
    let mut poses = Vec::with_capacity(cfg.n_sensors);
    while poses.len() < cfg.n_sensors {
        let r = (r0 + rng.random::<f64>() * (r1 - r0)).cbrt();
        // Uniform direction on the upper hemisphere.
        let z: f64 = rng.random();
        let phi = rng.random_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).sqrt();
        let offset = Vector3::new(s * phi.cos(), s * phi.sin(), z) * r;
        if offset.z < cfg.min_height {
            continue;
        }
        let position = center + offset;
        let to_center = (-offset).normalize();
        // Uniform direction inside the jitter cone about `to_center`.
        let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let psi = rng.random_range(0.0..2.0 * PI);
        let u = any_perpendicular(&to_center);
        let v = to_center.cross(&u);
        let axis = to_center * cos_t + (u * psi.cos() + v * psi.sin()) * sin_t;
        let roll = rng.random_range(0.0..2.0 * PI);
        let x0 = any_perpendicular(&axis);
        let x = axis_angle(&axis, roll) * x0;
        let y = axis.cross(&x);
        let orientation = Matrix3::from_columns(&[x, y, axis]);
        poses.push(SensorPose::new(position, orientation).expect("orthonormal by construction"));
    }
    Rig::new(poses, spec.clone())
}

/// Adds isotropic Gaussian noise of standard deviation `sigma` to every
/// sensor position; orientations are kept.
pub fn perturb_positions<R: Rng + ?Sized>(rig: &Rig, sigma: f64, rng: &mut R) -> Rig {
    let mut out = rig.clone();
    if sigma <= 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    for s in &mut out.sensors {
        s.pose.position += Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
    }
    out
}
