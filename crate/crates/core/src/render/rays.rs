use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::spec::{IntensityModel, SensorSpec};
use crate::error::{Error, Result};
use crate::geometry::Ray;

/// World-frame sensor placement; the sensor's +z axis (third column of
/// `orientation`) is the optical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorPose {
    pub position: Vector3<f64>,
    pub orientation: Matrix3<f64>,
}

impl SensorPose {
    pub fn new(position: Vector3<f64>, orientation: Matrix3<f64>) -> Result<Self> {
        let err = (orientation.transpose() * orientation - Matrix3::identity()).abs().max();
        if !(err <= 1e-9) || (orientation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "sensor orientation is not a rotation (orthonormality error {err:e})"
            )));
        }
        Ok(Self {
            position,
            orientation,
        })
    }

    /// Sensor at `position` with its optical axis pointing at `target`.
    pub fn look_at(position: Vector3<f64>, target: Vector3<f64>) -> Result<Self> {
        let z = target - position;
        if z.norm() < 1e-12 {
            return Err(Error::InvalidParameter("look_at target equals position".into()));
        }
        let z = z.normalize();
        let helper = if z.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let x = helper.cross(&z).normalize();
        let y = z.cross(&x);
        Self::new(position, Matrix3::from_columns(&[x, y, z]))
    }

    pub fn optical_axis(&self) -> Vector3<f64> {
        self.orientation.column(2).into_owned()
    }

    pub fn transformed(&self, r: &Matrix3<f64>, t: &Vector3<f64>) -> Self {
        Self {
            position: r * self.position + t,
            orientation: r * self.orientation,
        }
    }
}

/// Laser intensity along a sensor-frame unit direction.
pub fn laser_intensity(omega: &Vector3<f64>, spec: &SensorSpec) -> f64 {
    let [k1, k2, k3] = spec.intensity_k;
    match spec.intensity_model {
        IntensityModel::Constant => k1,
        IntensityModel::Datasheet => {
            let (x2, y2) = (omega.x * omega.x, omega.y * omega.y);
            k1 * (-k2 * (x2 + y2) - k3 * (x2 * x2 + y2 * y2)).exp()
        }
    }
}

/// Rays through the pixel centers of an `h x w` grid on the sensor-frame
/// plane `z = 1`, with their solid-angle quadrature weights
/// `Q = 4 tan²(FoV/2) ω_z³ / (h w)`.
pub fn generate_ray_grid(spec: &SensorSpec, pose: &SensorPose) -> Vec<(Ray, f64)> {
    let frame = SensorFrame::new(spec, pose);
    frame
        .sensor_dirs
        .iter()
        .zip(&frame.world_dirs)
        .map(|(s, w)| {
            (
                Ray {
                    origin: pose.position,
                    direction: *w,
                },
                pixel_solid_angle(spec, s.z),
            )
        })
        .collect()
}

#[inline]
fn pixel_solid_angle(spec: &SensorSpec, omega_z: f64) -> f64 {
    let tan = spec.half_fov_tan();
    4.0 * tan * tan * omega_z.powi(3) / (spec.grid_h * spec.grid_w) as f64
}

/// Per-sensor ray bundle with the geometry-independent factor
/// `(N_emit / π) Q(ω) I(ω)` precomputed for every ray.
#[derive(Clone, Debug)]
pub struct SensorFrame {
    pub origin: Vector3<f64>,
    pub sensor_dirs: Vec<Vector3<f64>>,
    pub world_dirs: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl SensorFrame {
    pub fn new(spec: &SensorSpec, pose: &SensorPose) -> Self {
        let (h, w) = (spec.grid_h, spec.grid_w);
        let tan = spec.half_fov_tan();
        let mut sensor_dirs = Vec::with_capacity(h * w);
        let mut world_dirs = Vec::with_capacity(h * w);
        let mut weights = Vec::with_capacity(h * w);
        for row in 0..h {
            let y = tan * ((2 * row + 1) as f64 / h as f64 - 1.0);
            for col in 0..w {
                let x = tan * ((2 * col + 1) as f64 / w as f64 - 1.0);
                let d = Vector3::new(x, y, 1.0).normalize();
                let q = pixel_solid_angle(spec, d.z);
                weights.push(spec.n_emit / PI * q * laser_intensity(&d, spec));
                world_dirs.push(pose.orientation * d);
                sensor_dirs.push(d);
            }
        }
        Self {
            origin: pose.position,
            sensor_dirs,
            world_dirs,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn ray(&self, i: usize) -> Ray {
        Ray {
            origin: self.origin,
            direction: self.world_dirs[i],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pyramid_solid_angle_mc(tan: f64, n: usize, seed: u64) -> f64 {
        // Uniform directions on the unit sphere; count those inside the pyramid.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inside = 0usize;
        for _ in 0..n {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            let (x, y) = (r * phi.cos(), r * phi.sin());
            if z > 0.0 && (x / z).abs() <= tan && (y / z).abs() <= tan {
                inside += 1;
            }
        }
        4.0 * PI * inside as f64 / n as f64
    }

    #[test]
    fn center_ray_of_odd_grid_is_optical_axis() {
        let spec = SensorSpec::default().with_grid(5, 5);
        let pose = SensorPose::look_at(Vector3::new(0.1, 0.2, 0.5), Vector3::zeros()).unwrap();
        let rays = generate_ray_grid(&spec, &pose);
        let (ray, q) = rays[12];
        assert!((ray.direction - pose.optical_axis()).norm() < 1e-15);
        let tan = spec.half_fov_tan();
        assert!((q - 4.0 * tan * tan / 25.0).abs() < 1e-18);
    }

    #[test]
    fn quadrature_sums_to_pyramid_solid_angle() {
        let spec = SensorSpec::default().with_grid(128, 128);
        let pose = SensorPose::look_at(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros()).unwrap();
        let total: f64 = generate_ray_grid(&spec, &pose).iter().map(|r| r.1).sum();
        let mc = pyramid_solid_angle_mc(spec.half_fov_tan(), 4_000_000, 1);
        assert!((total / mc - 1.0).abs() < 0.01, "quadrature {total} vs MC {mc}");
    }

    #[test]
    fn grid_size_and_axis_bound() {
        let spec = SensorSpec::default();
        let pose = SensorPose::look_at(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros()).unwrap();
        let frame = SensorFrame::new(&spec, &pose);
        assert_eq!(frame.len(), 4096);
        let bound = (2f64.sqrt() * 16f64.to_radians().tan()).asin().cos();
        assert!(frame.sensor_dirs.iter().all(|d| d.z >= bound));
    }

    #[test]
    fn intensity_at_center_is_k1() {
        let spec = SensorSpec::default();
        assert_eq!(laser_intensity(&Vector3::z(), &spec), 0.88);
    }

    #[test]
    fn intensity_is_even() {
        let spec = SensorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (x, y): (f64, f64) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            let z = (1.0 - x * x - y * y).sqrt();
            let a = laser_intensity(&Vector3::new(x, y, z), &spec);
            let b = laser_intensity(&Vector3::new(-x, -y, z), &spec);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn intensity_matches_scalar_formula() {
        let spec = SensorSpec::default();
        let (wx, wy) = (0.15f64, 0.15f64);
        let wz = (1.0 - wx * wx - wy * wy).sqrt();
        let oracle = 0.88 * (3.16 * (wx.powi(2) + wy.powi(2)) - 250.51 * (wx.powi(4) + wy.powi(4))).exp();
        let v = laser_intensity(&Vector3::new(wx, wy, wz), &spec);
        assert!((v - oracle).abs() < 1e-14);
    }

    #[test]
    fn non_rotation_orientation_rejected() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0);
        assert!(SensorPose::new(Vector3::zeros(), m).is_err());
    }
}
