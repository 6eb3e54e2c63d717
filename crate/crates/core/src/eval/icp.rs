use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use super::pointcloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{Pose6D, TriangleMesh};

/// Area-weighted deterministic samples on the mesh surface.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Vec<Vector3<f64>> {
    let areas: Vec<f64> = (0..mesh.triangles().len())
        .map(|i| {
            let [a, b, c] = mesh.triangle_vertices(i);
            0.5 * (b - a).cross(&(c - a)).norm()
        })
        .collect();
    let total: f64 = areas.iter().sum();
    if n == 0 || !(total > 0.0) {
        return Vec::new();
    }
    let mut cdf = Vec::with_capacity(areas.len());
    let mut acc = 0.0;
    for a in &areas {
        acc += a / total;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let tri = cdf.partition_point(|&c| c < u).min(areas.len() - 1);
            let [a, b, c] = mesh.triangle_vertices(tri);
            let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
            if s + t > 1.0 {
                s = 1.0 - s;
                t = 1.0 - t;
            }
            a + (b - a) * s + (c - a) * t
        })
        .collect()
}

/// Least-squares rigid transform `(R, t)` minimizing `Σ ‖R src_i + t − dst_i‖²`
/// (closed form via SVD of the cross-covariance).
pub fn rigid_fit(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> (Matrix3<f64>, Vector3<f64>) {
    assert_eq!(src.len(), dst.len());
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (d - cd) * (s - cs).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = u * d * v_t;
    (r, cd - r * cs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop when the mean correspondence distance changes by less than this
    /// (meters).
    pub tolerance: f64,
    pub template_samples: usize,
    pub sample_seed: u64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-7,
            template_samples: 4096,
            sample_seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IcpResult {
    pub pose: Pose6D,
    /// Mean correspondence distance before each update.
    pub mean_distances: Vec<f64>,
}

/// Point-to-point ICP of the template (in its own frame) onto `cloud`.
pub fn icp_align(cloud: &PointCloud, template: &TriangleMesh, init: &Pose6D, cfg: &IcpConfig) -> Result<IcpResult> {
    let samples = sample_surface(template, cfg.template_samples, cfg.sample_seed);
    icp_align_points(cloud, &samples, init, cfg)
}

pub fn icp_align_points(cloud: &PointCloud, template_points: &[Vector3<f64>], init: &Pose6D, cfg: &IcpConfig) -> Result<IcpResult> {
    if cloud.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    if template_points.is_empty() {
        return Err(Error::Empty("template samples"));
    }
    let tree = KdTree::new(template_points.to_vec());
    let mut r = init.rotation()?;
    let mut t = init.t();
    let mut distances = Vec::new();
    for _ in 0..cfg.max_iterations {
        // Correspondences in the template frame: x = Rᵀ (p − t).
        let mut src = Vec::with_capacity(cloud.len());
        let mut total = 0.0;
        for p in &cloud.points {
            let local = r.transpose() * (p - t);
            let (idx, d2) = tree.nearest(&local).expect("non-empty");
            total += d2.sqrt();
            src.push(template_points[idx]);
        }
        let mean = total / cloud.len() as f64;
        let converged = distances.last().is_some_and(|&prev: &f64| (prev - mean).abs() < cfg.tolerance);
        distances.push(mean);
        if converged {
            break;
        }
        let (r_new, t_new) = rigid_fit(&src, &cloud.points);
        r = r_new;
        t = t_new;
    }
    Ok(IcpResult {
        pose: Pose6D::from_rt(&r, &t),
        mean_distances: distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::{axis_angle, random_rotation};

    #[test]
    fn rigid_fit_recovers_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_rotation(&mut rng);
        let t = Vector3::new(0.1, -0.2, 0.3);
        let src: Vec<_> = (0..20).map(|_| Vector3::new(rng.random(), rng.random(), rng.random())).collect();
        let dst: Vec<_> = src.iter().map(|x| r * x + t).collect();
        let (r2, t2) = rigid_fit(&src, &dst);
        assert!((r2 - r).abs().max() < 1e-12);
        assert!((t2 - t).norm() < 1e-12);
    }

    #[test]
    fn reflection_is_not_returned() {
        let src: Vec<Vector3<f64>> = vec![Vector3::x(), Vector3::y(), Vector3::z(), Vector3::zeros()];
        let dst: Vec<_> = src.iter().map(|v| Vector3::new(-v.x, v.y, v.z)).collect();
        let (r, _) = rigid_fit(&src, &dst);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn samples_lie_on_surface() {
        let mesh = crate::geometry::primitives::box_mesh(Vector3::zeros(), Vector3::new(0.1, 0.2, 0.3));
        for p in sample_surface(&mesh, 500, 3) {
            let on_face = (p.x.abs() - 0.1).abs() < 1e-12 || (p.y.abs() - 0.2).abs() < 1e-12 || (p.z.abs() - 0.3).abs() < 1e-12;
            assert!(on_face && p.x.abs() <= 0.1 + 1e-12 && p.y.abs() <= 0.2 + 1e-12 && p.z.abs() <= 0.3 + 1e-12);
        }
        assert_eq!(sample_surface(&mesh, 10, 9), sample_surface(&mesh, 10, 9));
    }

    #[test]
    fn mean_distance_never_increases() {
        let mesh = crate::geometry::primitives::asymmetric_test_mesh();
        let gt = Pose6D::from_rt(&axis_angle(&Vector3::new(1.0, 2.0, 0.5).normalize(), 0.6), &Vector3::new(0.05, 0.0, 0.1));
        let cloud_pts: Vec<_> = sample_surface(&mesh, 300, 11).iter().map(|x| gt.transform_point(x).unwrap()).collect();
        let cloud = PointCloud {
            sensor_ids: vec![0; cloud_pts.len()],
            points: cloud_pts,
        };
        let init = Pose6D::from_rt(&(axis_angle(&Vector3::z(), 0.15) * gt.rotation().unwrap()), &(gt.t() + Vector3::new(0.01, -0.008, 0.004)));
        let res = icp_align(&cloud, &mesh, &init, &IcpConfig::default()).unwrap();
        for w in res.mean_distances.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", res.mean_distances);
        }
    }
}
