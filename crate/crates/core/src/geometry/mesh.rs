use std::path::Path;

use nalgebra::{Unit, Vector3};

use crate::error::{Error, Result};

/// Triangles with area at or below this are dropped on construction (m²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Indexed triangle mesh in meters with per-face unit normals.
///
/// Normals follow the winding order: `(v1 - v0) x (v2 - v0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vector3<f64>>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices and dropping degenerate
    /// triangles with a warning.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "non-finite vertex {v:?}"
            )));
        }
        let n = vertices.len();
        let mut kept = Vec::with_capacity(triangles.len());
        let mut dropped = 0usize;
        for (i, t) in triangles.into_iter().enumerate() {
            if t.iter().any(|&k| k >= n) {
                return Err(Error::InvalidParameter(format!(
                    "triangle {i} references vertex out of range (vertex count {n}): {t:?}"
                )));
            }
            if triangle_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]) <= MIN_TRIANGLE_AREA
            {
                dropped += 1;
                continue;
            }
            kept.push(t);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate triangle(s) on mesh load");
        }
        Ok(Self::from_parts(vertices, kept))
    }

    /// Builds a mesh from already validated topology (no degeneracy filtering).
    pub(crate) fn from_parts(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Self {
        let normals = triangles
            .iter()
            .map(|t| face_normal(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]))
            .collect();
        Self {
            vertices,
            triangles,
            normals,
        }
    }

    pub(crate) fn with_normals(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        normals: Vec<Vector3<f64>>,
    ) -> Self {
        Self {
            vertices,
            triangles,
            normals,
        }
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_vertices(t);
                triangle_area(&a, &b, &c)
            })
            .sum()
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Copy translated so the bounding-box center sits at the origin.
    pub fn centered(&self) -> Self {
        let (lo, hi) = self.bounds();
        let c = (lo + hi) * 0.5;
        let vertices = self.vertices.iter().map(|v| v - c).collect();
        Self::with_normals(vertices, self.triangles.clone(), self.normals.clone())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_parts(
            self.vertices.iter().map(|v| v * s).collect(),
            self.triangles.clone(),
        )
    }

    /// Model points used by the pose metrics: all vertices, or a deterministic
    /// evenly strided subsample when the mesh has more than `max_points`.
    pub fn model_points(&self, max_points: usize) -> Vec<Vector3<f64>> {
        let n = self.vertices.len();
        if n <= max_points || max_points == 0 {
            return self.vertices.clone();
        }
        (0..max_points)
            .map(|i| self.vertices[i * n / max_points])
            .collect()
    }

    /// Loads the `v`/`f` subset of Wavefront OBJ, triangulating polygons as fans
    /// and applying a uniform scale (e.g. 0.001 for millimeter files).
    pub fn load_obj(path: impl AsRef<Path>, scale: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_obj(&text, scale).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    pub fn parse_obj(text: &str, scale: f64) -> std::result::Result<Self, (usize, String)> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .take(3)
                        .map(|p| p.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| (line_no, format!("bad vertex coordinate: {e}")))?;
                    if coords.len() != 3 {
                        return Err((line_no, "vertex needs three coordinates".into()));
                    }
                    vertices.push(Vector3::new(coords[0], coords[1], coords[2]) * scale);
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for p in parts {
                        let first = p.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|e| (line_no, format!("bad face index {p:?}: {e}")))?;
                        let resolved = if i > 0 {
                            i - 1
                        } else if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            return Err((line_no, "face index 0 is invalid".into()));
                        };
                        if resolved < 0 || resolved as usize >= vertices.len() {
                            return Err((line_no, format!("face index {i} out of range")));
                        }
                        idx.push(resolved as usize);
                    }
                    if idx.len() < 3 {
                        return Err((line_no, "face needs at least three vertices".into()));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriangleMesh::new(vertices, triangles).map_err(|e| (0, e.to_string()))
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
        s
    }
}

pub fn triangle_area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn face_normal(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Vector3<f64> {
    Unit::new_normalize((b - a).cross(&(c - a))).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_fan_triangulation_and_scale() {
        let obj = "# quad\nv 0 0 0\nv 1000 0 0\nv 1000 1000 0\nv 0 1000 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4/4/1\n";
        let m = TriangleMesh::parse_obj(obj, 0.001).unwrap();
        assert_eq!(m.triangles().len(), 2);
        assert!((m.vertices()[2].x - 1.0).abs() < 1e-12);
        assert!((m.surface_area() - 1.0).abs() < 1e-12);
        for n in m.normals() {
            assert!((n - Vector3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn obj_negative_indices() {
        let obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let m = TriangleMesh::parse_obj(obj, 1.0).unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn obj_reports_line_of_bad_index() {
        let obj = "v 0 0 0\nv 1 0 0\nf 1 2 7\n";
        let err = TriangleMesh::parse_obj(obj, 1.0).unwrap_err();
        assert_eq!(err.0, 3);
    }

    #[test]
    fn degenerate_triangles_are_dropped() {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.triangles().len(), 1);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(TriangleMesh::new(v, vec![[0, 1, 3]]).is_err());
    }

    #[test]
    fn normals_are_unit() {
        let m = crate::geometry::primitives::asymmetric_test_mesh();
        for n in m.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }
}
