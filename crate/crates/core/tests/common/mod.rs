#![allow(dead_code)]

use difftof_core::datagen::{sample_object_pose, sample_rig, sample_sphere, stream_rng, RigSampling, Workspace};
use difftof_core::geometry::primitives::asymmetric_test_mesh;
use difftof_core::geometry::Plane;
use difftof_core::grad::{ObjectTemplate, ParametricScene, SceneParams};
use difftof_core::render::{Rig, SensorSpec};
use rand::Rng;

pub fn rig(seed: u64, n_sensors: usize, spec: &SensorSpec) -> Rig {
    let cfg = RigSampling {
        n_sensors,
        ..RigSampling::default()
    };
    sample_rig(&cfg, &Workspace::default(), spec, &mut stream_rng(seed, 1_000_000))
}

pub fn posed_scene(seed: u64) -> (ParametricScene, SceneParams) {
    let mesh = asymmetric_test_mesh();
    let plane = Plane::default();
    let mut rng = stream_rng(seed, 0);
    let pose = sample_object_pose(&mesh, &Workspace::default(), &plane, &mut rng);
    let a = rng.random_range(0.3..1.0);
    let b = rng.random_range(0.3..1.0);
    (
        ParametricScene::new(ObjectTemplate::Mesh(mesh), Some(plane)),
        SceneParams::posed(&pose, a, b),
    )
}

pub fn sphere_scene(seed: u64, level: u32) -> (ParametricScene, SceneParams) {
    let plane = Plane::default();
    let mut rng = stream_rng(seed, 0);
    let (c, d) = sample_sphere(&Workspace::default(), &plane, (0.06, 0.24), &mut rng);
    let a = rng.random_range(0.3..1.0);
    let b = rng.random_range(0.3..1.0);
    (
        ParametricScene::new(ObjectTemplate::sphere(level).unwrap(), Some(plane)),
        SceneParams::sphere(c, d, a, b),
    )
}

use difftof_core::geometry::{intersect_ray, Ray, SceneModel};
use difftof_core::render::{convolve_jitter, laser_intensity, soft_bin_weight, SensorPose, TransientHistogram};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Monte-Carlo estimate of the expected histogram: directions drawn uniformly
/// on the image plane `[-tan, tan]^2`, where the solid-angle density is
/// `ω_z^3 du dv`.
pub fn monte_carlo_render(
    scene: &SceneModel,
    spec: &SensorSpec,
    pose: &SensorPose,
    samples: usize,
    seed: u64,
) -> TransientHistogram {
    let tan = (spec.fov_deg.to_radians() / 2.0).tan();
    let area = 4.0 * tan * tan;
    let dt = spec.bin_width_s;
    let chunk = 100_000;
    let n_chunks = samples.div_ceil(chunk);
    let raw = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut hist = vec![0.0; spec.n_bins];
            let m = chunk.min(samples - c * chunk);
            for _ in 0..m {
                let u = rng.random_range(-tan..tan);
                let v = rng.random_range(-tan..tan);
                let omega = Vector3::new(u, v, 1.0).normalize();
                let dir = pose.orientation * omega;
                let Some(hit) = intersect_ray(&Ray::new(pose.position, dir).unwrap(), scene) else {
                    continue;
                };
                let cos = -hit.normal.dot(&dir);
                if cos <= 0.0 {
                    continue;
                }
                let rho = match hit.part {
                    difftof_core::geometry::Part::Object => scene.albedo_object(),
                    difftof_core::geometry::Part::Plane => scene.albedo_plane(),
                };
                let q = area / samples as f64 * omega.z.powi(3);
                let value = spec.n_emit / std::f64::consts::PI * q * laser_intensity(&omega, spec) * rho * cos
                    / (hit.distance * hit.distance);
                let tau = 2.0 * hit.distance / spec.speed_of_light;
                let center = (tau / dt).floor() as i64;
                for i in (center - 8).max(0)..=(center + 8).min(spec.n_bins as i64 - 1) {
                    hist[i as usize] += value * soft_bin_weight(tau, i as usize, dt, spec.soft_bin_k);
                }
            }
            hist
        })
        .reduce(
            || vec![0.0; spec.n_bins],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    let raw = TransientHistogram {
        counts: raw,
        bin_width_s: dt,
        sensor_id: 0,
    };
    convolve_jitter(&raw, spec).unwrap()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Captures of the bare default plane (albedo 0.9) by sensors at the given
/// heights, slightly tilted so every capture sees a spread of ranges.
pub fn plane_captures(truth: &SensorSpec, heights: &[f64]) -> Vec<difftof_core::optimize::CalibCapture> {
    let scene = SceneModel::new(None, Some(Plane::default()), 1.0, 0.9).unwrap();
    heights
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let tilt = 0.05 * i as f64;
            let pose = SensorPose::look_at(Vector3::new(tilt, 0.0, h), Vector3::new(-tilt, 0.02, 0.0)).unwrap();
            difftof_core::optimize::CalibCapture {
                histogram: difftof_core::render::render(&scene, truth, &pose).unwrap(),
                scene: scene.clone(),
                pose,
            }
        })
        .collect()
}
