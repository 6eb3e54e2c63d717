//! Bounding-volume hierarchy over mesh triangles for nearest-hit queries.

use nalgebra::Vector3;

use super::mesh::TriangleMesh;
use super::ray::{intersect_triangle, Ray, TriangleHit};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Aabb {
    min: Vector3<f64>,
    max: Vector3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn merge(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    /// Entry distance of the ray into the box, if it enters before `t_max`.
    #[inline]
    fn hit(&self, origin: &Vector3<f64>, inv_dir: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut ta = (self.min[a] - origin[a]) * inv_dir[a];
            let mut tb = (self.max[a] - origin[a]) * inv_dir[a];
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            // NaN from 0 * inf: treat the slab as unbounded along this axis.
            if ta.is_nan() || tb.is_nan() {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    tris: Vec<[Vector3<f64>; 3]>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let tris: Vec<[Vector3<f64>; 3]> = (0..mesh.triangles().len())
            .map(|t| mesh.triangle_vertices(t))
            .collect();
        let centroids: Vec<Vector3<f64>> =
            tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        if !tris.is_empty() {
            build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        }
        Self { nodes, order, tris }
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Nearest triangle hit with `t < t_max`. Exact ties resolve to the lower
    /// triangle index so the result does not depend on triangle order.
    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<TriangleHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vector3::new(
            1.0 / ray.direction.x,
            1.0 / ray.direction.y,
            1.0 / ray.direction.z,
        );
        let mut best: Option<TriangleHit> = None;
        let mut limit = t_max;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        if self.nodes[0].bounds().hit(&ray.origin, &inv, limit).is_some() {
            stack.push(0);
        }
        while let Some(ni) = stack.pop() {
            match &self.nodes[ni] {
                Node::Leaf { bounds, start, count } => {
                    if bounds.hit(&ray.origin, &inv, limit).is_none() {
                        continue;
                    }
                    for &tri in &self.order[*start..*start + *count] {
                        let [a, b, c] = &self.tris[tri];
                        if let Some((t, u, v)) = intersect_triangle(ray, a, b, c) {
                            let better = match &best {
                                None => t <= limit,
                                Some(h) => t < h.t || (t == h.t && tri < h.triangle),
                            };
                            if better {
                                limit = t;
                                best = Some(TriangleHit { triangle: tri, t, u, v });
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let tl = self.nodes[*left].bounds().hit(&ray.origin, &inv, limit);
                    let tr = self.nodes[*right].bounds().hit(&ray.origin, &inv, limit);
                    match (tl, tr) {
                        (Some(a), Some(b)) => {
                            if a <= b {
                                stack.push(*right);
                                stack.push(*left);
                            } else {
                                stack.push(*left);
                                stack.push(*right);
                            }
                        }
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }
}

fn build_node(
    tris: &[[Vector3<f64>; 3]],
    centroids: &[Vector3<f64>],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in &order[start..end] {
        for p in &tris[i] {
            bounds.grow(p);
        }
        cbounds.grow(&centroids[i]);
    }
    let idx = nodes.len();
    let count = end - start;
    let extent = cbounds.max - cbounds.min;
    if count <= LEAF_SIZE || extent.max() <= 0.0 {
        nodes.push(Node::Leaf { bounds, start, count });
        return idx;
    }
    let axis = extent.imax();
    order[start..end].sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    let mid = start + count / 2;
    nodes.push(Node::Leaf { bounds, start, count });
    let left = build_node(tris, centroids, order, start, mid, nodes);
    let right = build_node(tris, centroids, order, mid, end, nodes);
    let mut merged = *nodes[left].bounds();
    merged.merge(nodes[right].bounds());
    nodes[idx] = Node::Inner {
        bounds: merged,
        left,
        right,
    };
    idx
}
