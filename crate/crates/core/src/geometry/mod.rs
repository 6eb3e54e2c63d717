//! Meshes, rigid transforms, the 6D rotation parameterization, ray casting and
//! sphere tessellation.

pub mod bvh;
pub mod mesh;
pub mod pose;
pub mod primitives;
pub mod ray;
pub mod rotation;
pub mod scene;
pub mod sphere;

pub use bvh::Bvh;
pub use mesh::TriangleMesh;
pub use pose::{apply_pose, Pose6D};
pub use ray::{Intersection, Part, Plane, PlaneExtent, Ray};
pub use rotation::{matrix_to_rot6d, random_rotation, rot6d_to_matrix};
pub use scene::{intersect_ray, SceneModel};
pub use sphere::{tessellate_sphere, SphereOnPlane, UnitSphere};
