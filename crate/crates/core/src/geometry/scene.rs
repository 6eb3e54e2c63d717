use std::sync::Arc;

use super::bvh::Bvh;
use super::mesh::TriangleMesh;
use super::ray::{Intersection, Part, Plane, Ray};
use crate::error::{Error, Result};

/// A renderable scene: an optional posed object mesh, an optional supporting
/// plane, and one Lambertian albedo per part.
#[derive(Clone, Debug)]
pub struct SceneModel {
    object: Option<Arc<(TriangleMesh, Bvh)>>,
    plane: Option<Plane>,
    albedo_object: f64,
    albedo_plane: f64,
}

impl SceneModel {
    pub fn new(
        object: Option<TriangleMesh>,
        plane: Option<Plane>,
        albedo_object: f64,
        albedo_plane: f64,
    ) -> Result<Self> {
        if !(albedo_object >= 0.0) || !(albedo_plane >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "albedos must be non-negative (object {albedo_object}, plane {albedo_plane})"
            )));
        }
        let object = object.map(|m| {
            let bvh = Bvh::build(&m);
            Arc::new((m, bvh))
        });
        Ok(Self {
            object,
            plane,
            albedo_object,
            albedo_plane,
        })
    }

    pub fn empty() -> Self {
        Self {
            object: None,
            plane: None,
            albedo_object: 0.0,
            albedo_plane: 0.0,
        }
    }

    pub fn object(&self) -> Option<&TriangleMesh> {
        self.object.as_deref().map(|(m, _)| m)
    }

    pub(crate) fn object_bvh(&self) -> Option<&Bvh> {
        self.object.as_deref().map(|(_, b)| b)
    }

    pub fn plane(&self) -> Option<&Plane> {
        self.plane.as_ref()
    }

    pub fn albedo_object(&self) -> f64 {
        self.albedo_object
    }

    pub fn albedo_plane(&self) -> f64 {
        self.albedo_plane
    }

    pub fn with_albedos(&self, albedo_object: f64, albedo_plane: f64) -> Result<Self> {
        let mut s = self.clone();
        if !(albedo_object >= 0.0) || !(albedo_plane >= 0.0) {
            return Err(Error::InvalidParameter("albedos must be non-negative".into()));
        }
        s.albedo_object = albedo_object;
        s.albedo_plane = albedo_plane;
        Ok(s)
    }

    /// Applies one rigid transform to every part of the scene.
    pub fn transformed(&self, r: &nalgebra::Matrix3<f64>, t: &nalgebra::Vector3<f64>) -> Self {
        let object = self.object().map(|m| {
            TriangleMesh::from_parts(
                m.vertices().iter().map(|v| r * v + t).collect(),
                m.triangles().to_vec(),
            )
        });
        Self::new(
            object,
            self.plane.as_ref().map(|p| p.transformed(r, t)),
            self.albedo_object,
            self.albedo_plane,
        )
        .expect("albedos already validated")
    }
}

/// Nearest positive-distance hit across the object mesh and the plane.
pub fn intersect_ray(ray: &Ray, scene: &SceneModel) -> Option<Intersection> {
    let plane_t = scene.plane().and_then(|p| p.intersect(ray));
    let limit = plane_t.unwrap_or(f64::INFINITY);
    let obj = scene
        .object_bvh()
        .and_then(|b| b.intersect(ray, limit))
        .filter(|h| plane_t.is_none_or(|pt| h.t < pt));
    if let Some(h) = obj {
        let mesh = scene.object().expect("bvh implies mesh");
        return Some(Intersection {
            point: ray.at(h.t),
            normal: mesh.normals()[h.triangle],
            distance: h.t,
            part: Part::Object,
            barycentric: [1.0 - h.u - h.v, h.u, h.v],
            triangle: Some(h.triangle),
        });
    }
    let plane = scene.plane()?;
    let t = plane_t?;
    Some(Intersection {
        point: ray.at(t),
        normal: plane.unit_normal(),
        distance: t,
        part: Part::Plane,
        barycentric: [1.0, 0.0, 0.0],
        triangle: None,
    })
}
