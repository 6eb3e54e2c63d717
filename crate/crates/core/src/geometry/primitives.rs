//! Procedural meshes used by examples, tests and benchmarks.

use nalgebra::Vector3;

use super::mesh::TriangleMesh;

/// Closed axis-aligned box with outward winding.
pub fn box_mesh(center: Vector3<f64>, half: Vector3<f64>) -> TriangleMesh {
    let (verts, tris) = box_parts(center, half, 0);
    TriangleMesh::new(verts, tris).expect("box is valid")
}

fn box_parts(
    center: Vector3<f64>,
    half: Vector3<f64>,
    offset: usize,
) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let verts: Vec<Vector3<f64>> = (0..8)
        .map(|i| {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            center + Vector3::new(sx * half.x, sy * half.y, sz * half.z)
        })
        .collect();
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let mut tris = Vec::with_capacity(12);
    for q in quads {
        tris.push([q[0] + offset, q[1] + offset, q[2] + offset]);
        tris.push([q[0] + offset, q[2] + offset, q[3] + offset]);
    }
    (verts, tris)
}

/// An L-shaped block with an off-axis nub: no non-trivial rotational
/// symmetry, roughly 10 x 6 x 7 cm, bounding box centered at the origin.
pub fn asymmetric_test_mesh() -> TriangleMesh {
    let parts = [
        (Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.05, 0.02, 0.015)),
        (Vector3::new(-0.035, 0.0, 0.045), Vector3::new(0.015, 0.02, 0.03)),
        (Vector3::new(0.03, 0.035, 0.0), Vector3::new(0.015, 0.015, 0.01)),
    ];
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for (c, h) in parts {
        let (v, t) = box_parts(c, h, verts.len());
        verts.extend(v);
        tris.extend(t);
    }
    TriangleMesh::new(verts, tris)
        .expect("procedural mesh is valid")
        .centered()
}
