use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::pose::transform_vertices;
use crate::geometry::{Plane, Pose6D, SceneModel, TriangleMesh, UnitSphere};
use crate::scalar::{Real, V3};

/// Free parameters of a parametric scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneParams {
    PosedMesh {
        rot6: [f64; 6],
        translation: [f64; 3],
        albedo_object: f64,
        albedo_plane: f64,
    },
    Sphere {
        center: [f64; 3],
        diameter: f64,
        albedo_object: f64,
        albedo_plane: f64,
    },
}

pub const POSE_PARAM_NAMES: [&str; 11] = [
    "rot6_0", "rot6_1", "rot6_2", "rot6_3", "rot6_4", "rot6_5", "tx", "ty", "tz", "albedo_object",
    "albedo_plane",
];

pub const SPHERE_PARAM_NAMES: [&str; 6] = ["cx", "cy", "cz", "diameter", "albedo_object", "albedo_plane"];

impl SceneParams {
    pub fn posed(pose: &Pose6D, albedo_object: f64, albedo_plane: f64) -> Self {
        SceneParams::PosedMesh {
            rot6: pose.rot6,
            translation: pose.translation,
            albedo_object,
            albedo_plane,
        }
    }

    pub fn sphere(center: Vector3<f64>, diameter: f64, albedo_object: f64, albedo_plane: f64) -> Self {
        SceneParams::Sphere {
            center: center.into(),
            diameter,
            albedo_object,
            albedo_plane,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            SceneParams::PosedMesh { .. } => POSE_PARAM_NAMES.len(),
            SceneParams::Sphere { .. } => SPHERE_PARAM_NAMES.len(),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            SceneParams::PosedMesh { .. } => &POSE_PARAM_NAMES,
            SceneParams::Sphere { .. } => &SPHERE_PARAM_NAMES,
        }
    }

    /// Flat parameter vector; albedos are always the last two entries.
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            SceneParams::PosedMesh {
                rot6,
                translation,
                albedo_object,
                albedo_plane,
            } => rot6
                .iter()
                .chain(translation.iter())
                .copied()
                .chain([*albedo_object, *albedo_plane])
                .collect(),
            SceneParams::Sphere {
                center,
                diameter,
                albedo_object,
                albedo_plane,
            } => center
                .iter()
                .copied()
                .chain([*diameter, *albedo_object, *albedo_plane])
                .collect(),
        }
    }

    /// Same variant with values taken from `v` (layout of [`Self::to_vec`]).
    pub fn with_vec(&self, v: &[f64]) -> Self {
        assert_eq!(v.len(), self.n_params(), "parameter vector length");
        match self {
            SceneParams::PosedMesh { .. } => SceneParams::PosedMesh {
                rot6: v[0..6].try_into().unwrap(),
                translation: v[6..9].try_into().unwrap(),
                albedo_object: v[9],
                albedo_plane: v[10],
            },
            SceneParams::Sphere { .. } => SceneParams::Sphere {
                center: v[0..3].try_into().unwrap(),
                diameter: v[3],
                albedo_object: v[4],
                albedo_plane: v[5],
            },
        }
    }

    pub fn albedos(&self) -> (f64, f64) {
        match self {
            SceneParams::PosedMesh {
                albedo_object,
                albedo_plane,
                ..
            }
            | SceneParams::Sphere {
                albedo_object,
                albedo_plane,
                ..
            } => (*albedo_object, *albedo_plane),
        }
    }

    pub fn with_albedos(&self, object: f64, plane: f64) -> Self {
        let mut v = self.to_vec();
        let n = v.len();
        v[n - 2] = object;
        v[n - 1] = plane;
        self.with_vec(&v)
    }

    pub fn pose(&self) -> Option<Pose6D> {
        match self {
            SceneParams::PosedMesh {
                rot6, translation, ..
            } => Some(Pose6D {
                rot6: *rot6,
                translation: *translation,
            }),
            SceneParams::Sphere { .. } => None,
        }
    }

    /// Rotation re-derived through the 6D map so `rot6` holds exactly the
    /// first two columns of an orthonormal matrix.
    pub fn canonical(&self) -> Result<Self> {
        match self {
            SceneParams::PosedMesh {
                albedo_object,
                albedo_plane,
                ..
            } => {
                let pose = self.pose().expect("posed variant").canonical()?;
                Ok(SceneParams::posed(&pose, *albedo_object, *albedo_plane))
            }
            SceneParams::Sphere { .. } => Ok(self.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.albedos();
        if !(a >= 0.0) || !(b >= 0.0) {
            return Err(Error::InvalidParameter("albedos must be non-negative".into()));
        }
        match self {
            SceneParams::PosedMesh { .. } => {
                self.pose().expect("posed variant").rotation()?;
            }
            SceneParams::Sphere { diameter, .. } => {
                if !(*diameter > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sphere diameter must be positive, got {diameter}"
                    )));
                }
            }
        }
        if self.to_vec().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite scene parameter".into()));
        }
        Ok(())
    }
}

/// The known shape that parameters act on.
#[derive(Clone, Debug)]
pub enum ObjectTemplate {
    Mesh(TriangleMesh),
    Sphere(UnitSphere),
}

impl ObjectTemplate {
    pub fn sphere(level: u32) -> Result<Self> {
        if level < 2 {
            return Err(Error::InvalidParameter(format!(
                "tessellation level must be at least 2, got {level}"
            )));
        }
        Ok(ObjectTemplate::Sphere(UnitSphere::new(level)))
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        match self {
            ObjectTemplate::Mesh(m) => m.triangles(),
            ObjectTemplate::Sphere(s) => &s.triangles,
        }
    }

    /// Vertex positions for parameter vector `p` (layout of
    /// [`SceneParams::to_vec`]), generic over the scalar type.
    pub(crate) fn vertices<T: Real>(&self, p: &[T]) -> Result<Vec<V3<T>>> {
        match self {
            ObjectTemplate::Mesh(m) => {
                let rot6: [T; 6] = p[0..6].try_into().unwrap();
                let t: [T; 3] = p[6..9].try_into().unwrap();
                transform_vertices(m.vertices(), &rot6, &t)
            }
            ObjectTemplate::Sphere(s) => {
                let c: [T; 3] = p[0..3].try_into().unwrap();
                Ok(s.vertices_generic(&c, p[3]))
            }
        }
    }

    pub fn matches(&self, params: &SceneParams) -> bool {
        matches!(
            (self, params),
            (ObjectTemplate::Mesh(_), SceneParams::PosedMesh { .. })
                | (ObjectTemplate::Sphere(_), SceneParams::Sphere { .. })
        )
    }
}

/// A template plus the fixed supporting plane; maps parameters to scenes.
#[derive(Clone, Debug)]
pub struct ParametricScene {
    pub template: ObjectTemplate,
    pub plane: Option<Plane>,
}

impl ParametricScene {
    pub fn new(template: ObjectTemplate, plane: Option<Plane>) -> Self {
        Self { template, plane }
    }

    pub fn check(&self, params: &SceneParams) -> Result<()> {
        if !self.template.matches(params) {
            return Err(Error::Config(
                "scene parameters do not match the template kind".into(),
            ));
        }
        params.validate()
    }

    pub fn object_mesh(&self, params: &SceneParams) -> Result<TriangleMesh> {
        self.check(params)?;
        let verts = self.template.vertices::<f64>(&params.to_vec())?;
        Ok(TriangleMesh::from_parts(
            verts.iter().map(|v| v.values()).collect(),
            self.template.triangles().to_vec(),
        ))
    }

    pub fn scene_model(&self, params: &SceneParams) -> Result<SceneModel> {
        let mesh = self.object_mesh(params)?;
        let (a, b) = params.albedos();
        SceneModel::new(Some(mesh), self.plane.clone(), a, b)
    }
}
