use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};
use crate::scalar::{Real, V3};

/// Sphere parameterized by center and diameter (meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereOnPlane {
    pub center: [f64; 3],
    pub diameter: f64,
    pub tessellation_level: u32,
}

impl SphereOnPlane {
    pub fn new(center: Vector3<f64>, diameter: f64, tessellation_level: u32) -> Result<Self> {
        if !(diameter > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sphere diameter must be positive, got {diameter}"
            )));
        }
        if tessellation_level < 2 {
            return Err(Error::InvalidParameter(format!(
                "tessellation level must be at least 2, got {tessellation_level}"
            )));
        }
        Ok(Self {
            center: center.into(),
            diameter,
            tessellation_level,
        })
    }
}

/// Unit icosphere: fixed directions `û_i` and outward-wound triangles.
/// Level 0 is the icosahedron; each level splits every face in four.
#[derive(Clone, Debug)]
pub struct UnitSphere {
    pub directions: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl UnitSphere {
    pub fn new(level: u32) -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let mut dirs: Vec<Vector3<f64>> = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ]
        .iter()
        .map(|v| Vector3::from(*v).normalize())
        .collect();
        let mut tris: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..level {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, dirs: &mut Vec<Vector3<f64>>| -> usize {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    dirs.push((dirs[a] + dirs[b]).normalize());
                    dirs.len() - 1
                })
            };
            let mut next = Vec::with_capacity(tris.len() * 4);
            for &[a, b, c] in &tris {
                let ab = mid(a, b, &mut dirs);
                let bc = mid(b, c, &mut dirs);
                let ca = mid(c, a, &mut dirs);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            tris = next;
        }
        Self {
            directions: dirs,
            triangles: tris,
        }
    }

    /// `v_i = center + (diameter / 2) û_i`, generic for differentiation.
    pub fn vertices_generic<T: Real>(&self, center: &[T; 3], diameter: T) -> Vec<V3<T>> {
        let c = V3::new(center[0], center[1], center[2]);
        let r = diameter * T::cst(0.5);
        self.directions
            .iter()
            .map(|u| c + V3::lift(u).scaled(r))
            .collect()
    }
}

pub fn tessellate_sphere(s: &SphereOnPlane) -> TriangleMesh {
    let unit = UnitSphere::new(s.tessellation_level);
    let verts = unit
        .vertices_generic(&s.center, s.diameter)
        .iter()
        .map(|v| v.values())
        .collect();
    TriangleMesh::from_parts(verts, unit.triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;

    #[test]
    fn vertices_lie_on_sphere() {
        let c = Vector3::new(0.1, -0.05, 0.2);
        let m = tessellate_sphere(&SphereOnPlane::new(c, 0.2, 3).unwrap());
        for v in m.vertices() {
            assert!(((v - c).norm() - 0.1).abs() < 1e-10);
        }
    }

    #[test]
    fn doubling_diameter_doubles_offsets() {
        let a = tessellate_sphere(&SphereOnPlane::new(Vector3::zeros(), 0.1, 2).unwrap());
        let b = tessellate_sphere(&SphereOnPlane::new(Vector3::zeros(), 0.2, 2).unwrap());
        for (va, vb) in a.vertices().iter().zip(b.vertices()) {
            assert_eq!(va * 2.0, *vb);
        }
        let c = Vector3::new(0.3, 0.1, 0.0);
        let a = tessellate_sphere(&SphereOnPlane::new(c, 0.1, 2).unwrap());
        let b = tessellate_sphere(&SphereOnPlane::new(c, 0.2, 2).unwrap());
        for (va, vb) in a.vertices().iter().zip(b.vertices()) {
            assert!(((va - c) * 2.0 - (vb - c)).norm() < 1e-15);
        }
    }

    #[test]
    fn area_converges_to_analytic() {
        let r: f64 = 0.07;
        let m = tessellate_sphere(&SphereOnPlane::new(Vector3::zeros(), 2.0 * r, 4).unwrap());
        let exact = 4.0 * std::f64::consts::PI * r * r;
        assert!((m.surface_area() / exact - 1.0).abs() < 0.02);
    }

    #[test]
    fn normals_point_outward() {
        let m = tessellate_sphere(&SphereOnPlane::new(Vector3::zeros(), 1.0, 2).unwrap());
        for t in 0..m.triangles().len() {
            let [a, b, c] = m.triangle_vertices(t);
            assert!(m.normals()[t].dot(&((a + b + c) / 3.0)) > 0.0);
        }
    }

    #[test]
    fn diameter_gradient_is_half_direction() {
        let unit = UnitSphere::new(2);
        let center = [Dual::<1>::cst(0.1), Dual::cst(0.2), Dual::cst(0.3)];
        let d = 0.15;
        let verts = unit.vertices_generic(&center, Dual::variable(d, 0));
        let h = 1e-6;
        let plus = unit.vertices_generic(&[0.1, 0.2, 0.3], d + h);
        let minus = unit.vertices_generic(&[0.1, 0.2, 0.3], d - h);
        for (i, v) in verts.iter().enumerate() {
            let u = unit.directions[i];
            assert_eq!([v.x.d[0], v.y.d[0], v.z.d[0]], [u.x / 2.0, u.y / 2.0, u.z / 2.0]);
            let fd = (plus[i] - minus[i]).values() / (2.0 * h);
            assert!((fd - u / 2.0).norm() < 1e-8);
        }
    }

    #[test]
    fn invalid_spheres_rejected() {
        assert!(SphereOnPlane::new(Vector3::zeros(), 0.0, 3).is_err());
        assert!(SphereOnPlane::new(Vector3::zeros(), 0.1, 1).is_err());
    }
}
