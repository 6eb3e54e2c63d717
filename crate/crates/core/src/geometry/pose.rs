use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use super::rotation::{matrix_to_rot6d, rot6d_to_matrix, rot6d_to_matrix_generic};
use crate::error::Result;
use crate::scalar::{mat_vec, Real, V3};

/// Rigid pose: 6D rotation representation plus translation in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose6D {
    pub rot6: [f64; 6],
    pub translation: [f64; 3],
}

impl Pose6D {
    pub fn identity() -> Self {
        Self {
            rot6: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            translation: [0.0; 3],
        }
    }

    pub fn from_rt(r: &Matrix3<f64>, t: &Vector3<f64>) -> Self {
        Self {
            rot6: matrix_to_rot6d(r),
            translation: [t.x, t.y, t.z],
        }
    }

    pub fn rotation(&self) -> Result<Matrix3<f64>> {
        rot6d_to_matrix(&self.rot6)
    }

    pub fn t(&self) -> Vector3<f64> {
        Vector3::from(self.translation)
    }

    pub fn inverse(&self) -> Result<Self> {
        let r = self.rotation()?;
        let rt = r.transpose();
        Ok(Self::from_rt(&rt, &(-(rt * self.t()))))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose6D) -> Result<Self> {
        let (ra, rb) = (self.rotation()?, other.rotation()?);
        Ok(Self::from_rt(&(ra * rb), &(ra * other.t() + self.t())))
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.rotation()? * p + self.t())
    }

    /// Same pose with `rot6` replaced by the first two columns of its
    /// orthonormalized rotation.
    pub fn canonical(&self) -> Result<Self> {
        Ok(Self::from_rt(&self.rotation()?, &self.t()))
    }
}

/// Generic `v' = R v + T` over all template vertices.
pub(crate) fn transform_vertices<T: Real>(
    vertices: &[Vector3<f64>],
    rot6: &[T; 6],
    translation: &[T; 3],
) -> Result<Vec<V3<T>>> {
    let r = rot6d_to_matrix_generic(rot6)?;
    let t = V3::new(translation[0], translation[1], translation[2]);
    Ok(vertices
        .iter()
        .map(|v| mat_vec(&r, &V3::lift(v)) + t)
        .collect())
}

/// Rigidly transforms a mesh; topology is unchanged and normals are rotated.
pub fn apply_pose(mesh: &TriangleMesh, pose: &Pose6D) -> Result<TriangleMesh> {
    let verts = transform_vertices(mesh.vertices(), &pose.rot6, &pose.translation)?;
    let r = pose.rotation()?;
    Ok(TriangleMesh::with_normals(
        verts.iter().map(|v| v.values()).collect(),
        mesh.triangles().to_vec(),
        mesh.normals().iter().map(|n| r * n).collect(),
    ))
}
