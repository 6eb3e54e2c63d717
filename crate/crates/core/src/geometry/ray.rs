use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hits closer than this (meters) are ignored to avoid self-intersection.
pub const MIN_HIT_DISTANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    /// Normalizes `direction`; zero or non-finite directions are rejected.
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ray direction {direction:?} cannot be normalized"
            )));
        }
        Ok(Self {
            origin,
            direction: direction / n,
        })
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.direction * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Object,
    Plane,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intersection {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub distance: f64,
    pub part: Part,
    pub barycentric: [f64; 3],
    /// Object triangle index; `None` for the analytic plane.
    pub triangle: Option<usize>,
}

/// Raw triangle hit: distance and barycentric `(u, v)` of vertices 1 and 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleHit {
    pub triangle: usize,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Double-sided Möller–Trumbore ray/triangle test.
#[inline]
pub fn intersect_triangle(
    ray: &Ray,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Option<(f64, f64, f64)> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > MIN_HIT_DISTANCE).then_some((t, u, v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlaneExtent {
    Infinite,
    /// Rectangle centered on the plane origin; `u_axis` lies in the plane and
    /// the second axis is `normal x u_axis`.
    Rect {
        u_axis: [f64; 3],
        half_u: f64,
        half_v: f64,
    },
}

/// Supporting plane with outward (lit) side along `normal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub origin: [f64; 3],
    pub normal: [f64; 3],
    pub extent: PlaneExtent,
}

impl Plane {
    /// Infinite horizontal plane `z = height` facing +z.
    pub fn horizontal(height: f64) -> Self {
        Self {
            origin: [0.0, 0.0, height],
            normal: [0.0, 0.0, 1.0],
            extent: PlaneExtent::Infinite,
        }
    }

    /// Axis-aligned rectangle `[-half_x, half_x] x [-half_y, half_y]` at `z = height`.
    pub fn horizontal_rect(height: f64, half_x: f64, half_y: f64) -> Self {
        Self {
            origin: [0.0, 0.0, height],
            normal: [0.0, 0.0, 1.0],
            extent: PlaneExtent::Rect {
                u_axis: [1.0, 0.0, 0.0],
                half_u: half_x,
                half_v: half_y,
            },
        }
    }

    pub fn origin(&self) -> Vector3<f64> {
        Vector3::from(self.origin)
    }

    pub fn unit_normal(&self) -> Vector3<f64> {
        Unit::new_normalize(Vector3::from(self.normal)).into_inner()
    }

    /// Signed height of `p` above the plane.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.unit_normal().dot(&(p - self.origin()))
    }

    /// Ray parameter of the hit, if any.
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        let n = self.unit_normal();
        let denom = n.dot(&ray.direction);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = n.dot(&(self.origin() - ray.origin)) / denom;
        if !(t > MIN_HIT_DISTANCE) || !t.is_finite() {
            return None;
        }
        if let PlaneExtent::Rect {
            u_axis,
            half_u,
            half_v,
        } = &self.extent
        {
            let u = Unit::new_normalize(Vector3::from(*u_axis)).into_inner();
            let v = n.cross(&u);
            let d = ray.at(t) - self.origin();
            if d.dot(&u).abs() > *half_u || d.dot(&v).abs() > *half_v {
                return None;
            }
        }
        Some(t)
    }

    /// Applies a rigid transform to the plane.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, t: &Vector3<f64>) -> Self {
        let extent = match &self.extent {
            PlaneExtent::Infinite => PlaneExtent::Infinite,
            PlaneExtent::Rect {
                u_axis,
                half_u,
                half_v,
            } => PlaneExtent::Rect {
                u_axis: (r * Vector3::from(*u_axis)).into(),
                half_u: *half_u,
                half_v: *half_v,
            },
        };
        Self {
            origin: (r * self.origin() + t).into(),
            normal: (r * Vector3::from(self.normal)).into(),
            extent,
        }
    }
}

impl Default for Plane {
    fn default() -> Self {
        Plane::horizontal(0.0)
    }
}
