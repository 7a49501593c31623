//! Software stand-in for a hardware ray-query backend: a binary BVH over a
//! triangle set answering closest-hit and hit-count queries with an
//! adjustable maximum ray length.
//!
//! The primitive test is the shear-and-scale watertight ray/triangle
//! intersection. Edge and vertex grazes are resolved by a fill rule on the
//! projected edge functions so that a ray crossing a shared edge of two
//! adjacent triangles registers exactly one hit between them - the property
//! the parity-based point-in-polyhedron test depends on.

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::mesh::Aabb;
use crate::par;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("cannot build an acceleration structure over an empty triangle set")]
    EmptyTriangleSet,
}

/// Ray with precomputed traversal constants. `t_max` bounds the parametric
/// hit interval `(0, t_max]`: hits exactly at `t_max` count, the origin
/// itself never does.
#[derive(Debug, Clone)]
pub struct Ray {
    pub origin: Point3<f64>,
    /// Unit length.
    pub direction: Vector3<f64>,
    pub t_max: f64,
    // shear constants of the watertight test
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
    inv_dir: Vector3<f64>,
}

impl Ray {
    /// Normalizes `direction`; `t_max` starts unbounded.
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Ray {
        let n = direction.norm();
        assert!(n > 0.0 && n.is_finite(), "ray direction must be nonzero");
        let direction = direction / n;

        let kz = (0..3)
            .max_by(|&i, &j| {
                direction[i]
                    .abs()
                    .partial_cmp(&direction[j].abs())
                    .unwrap()
            })
            .unwrap();
        let (mut kx, mut ky) = ((kz + 1) % 3, (kz + 2) % 3);
        if direction[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        let sx = direction[kx] / direction[kz];
        let sy = direction[ky] / direction[kz];
        let sz = 1.0 / direction[kz];
        let inv_dir = Vector3::new(1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z);

        Ray {
            origin,
            direction,
            t_max: f64::INFINITY,
            kx,
            ky,
            kz,
            sx,
            sy,
            sz,
            inv_dir,
        }
    }

    pub fn with_t_max(mut self, t_max: f64) -> Ray {
        assert!(t_max > 0.0, "t_max must be positive");
        self.t_max = t_max;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Parametric distance in model units (direction is unit length).
    pub t: f64,
    /// Index into the triangle list the structure was built over.
    pub triangle_id: u32,
}

/// Work counters for the culling ablation. Merged across worker threads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub node_visits: u64,
    pub triangle_tests: u64,
    pub rays_cast: u64,
}

impl TraversalStats {
    pub fn merge(&mut self, other: &TraversalStats) {
        self.node_visits += other.node_visits;
        self.triangle_tests += other.triangle_tests;
        self.rays_cast += other.rays_cast;
    }
}

/// Fill rule deciding which of two triangles sharing an edge owns a hit
/// lying exactly on it. Adjacent consistently wound triangles see the same
/// projected edge with bitwise-opposite direction, so exactly one accepts.
#[inline]
fn edge_owns(dx: f64, dy: f64, flipped: bool) -> bool {
    let (dx, dy) = if flipped { (-dx, -dy) } else { (dx, dy) };
    dy > 0.0 || (dy == 0.0 && dx > 0.0)
}

#[inline]
fn intersect_impl(
    ray: &Ray,
    t_max: f64,
    v0: &Point3<f64>,
    v1: &Point3<f64>,
    v2: &Point3<f64>,
) -> Option<f64> {
    let a = v0 - ray.origin;
    let b = v1 - ray.origin;
    let c = v2 - ray.origin;

    let az = a[ray.kz];
    let bz = b[ray.kz];
    let cz = c[ray.kz];
    let ax = a[ray.kx] - ray.sx * az;
    let ay = a[ray.ky] - ray.sy * az;
    let bx = b[ray.kx] - ray.sx * bz;
    let by = b[ray.ky] - ray.sy * bz;
    let cx = c[ray.kx] - ray.sx * cz;
    let cy = c[ray.ky] - ray.sy * cz;

    // scaled barycentrics = edge functions of the projected triangle
    let mut u = cx * by - cy * bx;
    let mut v = ax * cy - ay * cx;
    let mut w = bx * ay - by * ax;

    let any_neg = u < 0.0 || v < 0.0 || w < 0.0;
    let any_pos = u > 0.0 || v > 0.0 || w > 0.0;
    if any_neg && any_pos {
        return None;
    }
    // two-sided test: orient so the edge functions are nonnegative
    let flipped = any_neg;
    if flipped {
        u = -u;
        v = -v;
        w = -w;
    }
    let det = u + v + w;
    if det == 0.0 {
        return None;
    }
    // boundary hits belong to exactly one triangle
    if (u == 0.0 && !edge_owns(cx - bx, cy - by, flipped))
        || (v == 0.0 && !edge_owns(ax - cx, ay - cy, flipped))
        || (w == 0.0 && !edge_owns(bx - ax, by - ay, flipped))
    {
        return None;
    }

    // u, v, w and det carry the same flip, so the ratio keeps the sign of t
    let t_scaled = u * (ray.sz * az) + v * (ray.sz * bz) + w * (ray.sz * cz);
    let t = t_scaled / det;
    if t > 0.0 && t <= t_max {
        Some(t)
    } else {
        None
    }
}

/// Watertight ray/triangle intersection over `(0, ray.t_max]`.
pub fn intersect_triangle(
    ray: &Ray,
    v0: &Point3<f64>,
    v1: &Point3<f64>,
    v2: &Point3<f64>,
) -> Option<f64> {
    intersect_impl(ray, ray.t_max, v0, v1, v2)
}

const LEAF_SIZE: usize = 4;
const MORTON_BITS: u32 = 10;
/// Slack applied to the node slab test so rounding never culls a box whose
/// triangles still produce a hit.
const NODE_TEST_SLACK: f64 = 1.0 + 4e-14;

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { first: u32, count: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
struct PackedTriangle {
    v0: Point3<f64>,
    v1: Point3<f64>,
    v2: Point3<f64>,
    id: u32,
}

/// Immutable binary BVH. Triangles are sorted by the Morton code of their
/// centroid and leaves pair up bottom-up, so the layout is a pure function
/// of the input.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    root: u32,
    tris: Vec<PackedTriangle>,
    /// Morton-sorted permutation of the input triangle indices.
    order: Vec<u32>,
    bounds: Aabb,
}

fn expand_bits(mut v: u32) -> u32 {
    v = v.wrapping_mul(0x0001_0001) & 0xFF00_00FF;
    v = v.wrapping_mul(0x0000_0101) & 0x0F00_F00F;
    v = v.wrapping_mul(0x0000_0011) & 0xC30C_30C3;
    v = v.wrapping_mul(0x0000_0005) & 0x4924_9249;
    v
}

/// 30-bit Morton code of a point quantized inside `bounds`.
fn morton_code(p: &Point3<f64>, bounds: &Aabb) -> u32 {
    let cells = (1u32 << MORTON_BITS) as f64;
    let mut q = [0u32; 3];
    for i in 0..3 {
        let extent = bounds.max[i] - bounds.min[i];
        let x = if extent > 0.0 {
            ((p[i] - bounds.min[i]) / extent * cells).floor()
        } else {
            0.0
        };
        q[i] = (x.max(0.0) as u32).min((1 << MORTON_BITS) - 1);
    }
    (expand_bits(q[0]) << 2) | (expand_bits(q[1]) << 1) | expand_bits(q[2])
}

impl Bvh {
    pub fn build(vertices: &[Point3<f64>], triangles: &[[u32; 3]]) -> Result<Bvh, BuildError> {
        if triangles.is_empty() {
            return Err(BuildError::EmptyTriangleSet);
        }

        let centroid_bounds = {
            let mut bb = Aabb::empty();
            for t in triangles {
                let mut centroid = Vector3::zeros();
                for &i in t {
                    centroid += vertices[i as usize].coords;
                }
                bb.grow(&Point3::from(centroid / 3.0));
            }
            bb
        };

        let mut keyed: Vec<(u32, u32)> = par::map_indexed(triangles, |i, t| {
            let mut centroid = Vector3::zeros();
            for &k in t {
                centroid += vertices[k as usize].coords;
            }
            let code = morton_code(&Point3::from(centroid / 3.0), &centroid_bounds);
            (code, i as u32)
        });
        par::sort_by_key(&mut keyed, |&(code, id)| (code, id));
        let order: Vec<u32> = keyed.iter().map(|&(_, id)| id).collect();

        let tris: Vec<PackedTriangle> = order
            .iter()
            .map(|&id| {
                let [a, b, c] = triangles[id as usize];
                PackedTriangle {
                    v0: vertices[a as usize],
                    v1: vertices[b as usize],
                    v2: vertices[c as usize],
                    id,
                }
            })
            .collect();

        let tri_aabb = |t: &PackedTriangle| {
            let mut bb = Aabb::empty();
            bb.grow(&t.v0);
            bb.grow(&t.v1);
            bb.grow(&t.v2);
            bb
        };

        // leaves over consecutive runs of the sorted order, then pair
        // adjacent nodes level by level
        let mut nodes: Vec<Node> = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 2);
        let mut level: Vec<u32> = Vec::with_capacity(tris.len() / LEAF_SIZE + 1);
        let mut first = 0usize;
        while first < tris.len() {
            let count = LEAF_SIZE.min(tris.len() - first);
            let mut aabb = Aabb::empty();
            for t in &tris[first..first + count] {
                aabb = aabb.union(&tri_aabb(t));
            }
            level.push(nodes.len() as u32);
            nodes.push(Node {
                aabb,
                kind: NodeKind::Leaf {
                    first: first as u32,
                    count: count as u32,
                },
            });
            first += count;
        }
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len() / 2 + 1);
            for pair in level.chunks(2) {
                match *pair {
                    [left, right] => {
                        let aabb = nodes[left as usize]
                            .aabb
                            .union(&nodes[right as usize].aabb);
                        next.push(nodes.len() as u32);
                        nodes.push(Node {
                            aabb,
                            kind: NodeKind::Inner { left, right },
                        });
                    }
                    [lone] => next.push(lone),
                    _ => unreachable!(),
                }
            }
            level = next;
        }

        let root = level[0];
        let bounds = nodes[root as usize].aabb;
        Ok(Bvh {
            nodes,
            root,
            tris,
            order,
            bounds,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn aabb(&self) -> Aabb {
        self.bounds
    }

    /// Morton-sorted permutation of the input triangle indices.
    pub fn primitive_order(&self) -> &[u32] {
        &self.order
    }

    /// Slab test over `[0, t_limit]`, slightly inflated.
    #[inline]
    fn hits_node(&self, node: &Node, ray: &Ray, t_limit: f64) -> bool {
        let mut t_near = 0.0f64;
        let mut t_far = t_limit;
        for i in 0..3 {
            let d = ray.direction[i];
            if d == 0.0 {
                // ray parallel to the slab (covers signed zeros, where the
                // inverse would turn boundary contact into 0 * inf = NaN)
                if ray.origin[i] < node.aabb.min[i] || ray.origin[i] > node.aabb.max[i] {
                    return false;
                }
                continue;
            }
            let inv = ray.inv_dir[i];
            let t0 = (node.aabb.min[i] - ray.origin[i]) * inv;
            let t1 = (node.aabb.max[i] - ray.origin[i]) * inv;
            t_near = t_near.max(t0.min(t1));
            t_far = t_far.min(t0.max(t1) * NODE_TEST_SLACK);
        }
        t_near <= t_far
    }

    /// Closest hit in `(0, ray.t_max]`; ties on `t` go to the smaller
    /// triangle id.
    pub fn closest_hit(&self, ray: &Ray, stats: &mut TraversalStats) -> Option<Hit> {
        stats.rays_cast += 1;
        let mut best: Option<Hit> = None;
        let mut best_t = ray.t_max;
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = self.root;
        top += 1;

        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            stats.node_visits += 1;
            if !self.hits_node(node, ray, best_t) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { first, count } => {
                    for t in &self.tris[first as usize..(first + count) as usize] {
                        stats.triangle_tests += 1;
                        if let Some(hit_t) = intersect_impl(ray, best_t, &t.v0, &t.v1, &t.v2) {
                            let better = match best {
                                None => true,
                                Some(h) => hit_t < h.t || (hit_t == h.t && t.id < h.triangle_id),
                            };
                            if better {
                                best = Some(Hit {
                                    t: hit_t,
                                    triangle_id: t.id,
                                });
                                best_t = hit_t;
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    // near child on top of the stack
                    let axis_near_left = {
                        let l = &self.nodes[left as usize];
                        let r = &self.nodes[right as usize];
                        let i = ray.kz;
                        if ray.direction[i] >= 0.0 {
                            l.aabb.min[i] <= r.aabb.min[i]
                        } else {
                            l.aabb.max[i] >= r.aabb.max[i]
                        }
                    };
                    let (near, far) = if axis_near_left {
                        (left, right)
                    } else {
                        (right, left)
                    };
                    stack[top] = far;
                    stack[top + 1] = near;
                    top += 2;
                }
            }
        }
        best
    }

    /// Number of triangles with an intersection in `(0, ray.t_max]`, each
    /// counted at most once, plus the nearest of those hits.
    pub fn count_and_first(&self, ray: &Ray, stats: &mut TraversalStats) -> (u32, Option<Hit>) {
        stats.rays_cast += 1;
        let mut count = 0u32;
        let mut first: Option<Hit> = None;
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = self.root;
        top += 1;

        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            stats.node_visits += 1;
            if !self.hits_node(node, ray, ray.t_max) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { first: f, count: c } => {
                    for t in &self.tris[f as usize..(f + c) as usize] {
                        stats.triangle_tests += 1;
                        if let Some(hit_t) = intersect_impl(ray, ray.t_max, &t.v0, &t.v1, &t.v2) {
                            count += 1;
                            let better = match first {
                                None => true,
                                Some(h) => hit_t < h.t || (hit_t == h.t && t.id < h.triangle_id),
                            };
                            if better {
                                first = Some(Hit {
                                    t: hit_t,
                                    triangle_id: t.id,
                                });
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack[top] = left;
                    stack[top + 1] = right;
                    top += 2;
                }
            }
        }
        (count, first)
    }

    pub fn count_hits(&self, ray: &Ray, stats: &mut TraversalStats) -> u32 {
        self.count_and_first(ray, stats).0
    }

    /// Indented text dump for debugging.
    pub fn dump_tree(&self) -> String {
        fn rec(bvh: &Bvh, node: u32, depth: usize, out: &mut String) {
            let n = &bvh.nodes[node as usize];
            let pad = "  ".repeat(depth);
            match n.kind {
                NodeKind::Leaf { first, count } => {
                    let ids: Vec<u32> = bvh.tris[first as usize..(first + count) as usize]
                        .iter()
                        .map(|t| t.id)
                        .collect();
                    out.push_str(&format!(
                        "{pad}leaf {:?} min {:?} max {:?}\n",
                        ids,
                        n.aabb.min.coords.as_slice(),
                        n.aabb.max.coords.as_slice()
                    ));
                }
                NodeKind::Inner { left, right } => {
                    out.push_str(&format!(
                        "{pad}node min {:?} max {:?}\n",
                        n.aabb.min.coords.as_slice(),
                        n.aabb.max.coords.as_slice()
                    ));
                    rec(bvh, left, depth + 1, out);
                    rec(bvh, right, depth + 1, out);
                }
            }
        }
        let mut out = String::new();
        rec(self, self.root, 0, &mut out);
        out
    }
}
