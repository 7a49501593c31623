//! Ray-parity point-in-polyhedron classification.
//!
//! A point is inside a closed mesh iff a ray from it crosses the surface an
//! odd number of times. Precision artifacts near edges and vertices can
//! corrupt a single count, so a point only counts as inside when the test
//! passes in both opposite directions (the two-way test); points lying
//! exactly on the surface then land on the outside side of the conjunction.

use nalgebra::{Point3, Vector3};

use crate::accel::{Bvh, Ray, TraversalStats};
use crate::mesh::TriangleMesh;
use crate::par;

/// Which input object a point set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceObject {
    A,
    B,
}

impl SourceObject {
    pub(crate) fn tag(self) -> u64 {
        match self {
            SourceObject::A => 0xA,
            SourceObject::B => 0xB,
        }
    }
}

/// A vertex classified inside the other object.
#[derive(Debug, Clone, Copy)]
pub struct PenetrationPoint {
    /// Index into the source mesh's vertex list.
    pub vertex_id: u32,
    pub position: Point3<f64>,
    /// Nearer of the two first-hit distances seen by the classification
    /// rays: an upper bound on the distance to the other object's surface.
    pub pip_distance: f64,
}

/// All inside vertices of one object with respect to the other.
#[derive(Debug, Clone)]
pub struct PenetrationPointSet {
    pub points: Vec<PenetrationPoint>,
    pub source: SourceObject,
    /// Per-vertex flags over the full source vertex list; `points` holds
    /// exactly the vertices flagged true, in increasing id order.
    pub inside_flags: Vec<bool>,
}

impl PenetrationPointSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Single-direction parity test: crossing count plus the first-hit distance
/// (present whenever the ray hits anything, odd or even).
pub fn pip_one_way(
    bvh: &Bvh,
    point: &Point3<f64>,
    direction: &Vector3<f64>,
    stats: &mut TraversalStats,
) -> (bool, Option<f64>) {
    let ray = Ray::new(*point, *direction);
    let (count, first) = bvh.count_and_first(&ray, stats);
    (count % 2 == 1, first.map(|h| h.t))
}

/// Two-way test along `axis_direction` and its opposite. Inside requires odd
/// parity in both directions; the returned distance is the nearer of the two
/// first hits and is always finite for an inside point.
pub fn pip_two_way(
    bvh: &Bvh,
    point: &Point3<f64>,
    axis_direction: &Vector3<f64>,
    stats: &mut TraversalStats,
) -> (bool, Option<f64>) {
    let (odd_pos, first_pos) = pip_one_way(bvh, point, axis_direction, stats);
    let (odd_neg, first_neg) = pip_one_way(bvh, point, &-axis_direction, stats);
    if odd_pos && odd_neg {
        // both directions hit: a closed mesh surrounds the point
        let d = match (first_pos, first_neg) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("odd parity implies at least one hit"),
        };
        (true, Some(d))
    } else {
        (false, None)
    }
}

/// Default classification ray direction.
pub fn default_axis() -> Vector3<f64> {
    Vector3::x()
}

/// Classifies every vertex of `source_mesh` against the object indexed by
/// `bvh_other`. Vertices are independent; the result does not depend on
/// evaluation order or thread count.
pub fn extract_penetration_points(
    bvh_other: &Bvh,
    source_mesh: &TriangleMesh,
    source: SourceObject,
    axis_direction: &Vector3<f64>,
    stats: &mut TraversalStats,
) -> PenetrationPointSet {
    let per_vertex = par::map_indexed(&source_mesh.vertices, |_, v| {
        let mut local = TraversalStats::default();
        let (inside, dist) = pip_two_way(bvh_other, v, axis_direction, &mut local);
        (inside, dist, local)
    });

    let mut points = Vec::new();
    let mut inside_flags = vec![false; source_mesh.vertex_count()];
    for (i, (inside, dist, local)) in per_vertex.into_iter().enumerate() {
        stats.merge(&local);
        if inside {
            inside_flags[i] = true;
            points.push(PenetrationPoint {
                vertex_id: i as u32,
                position: source_mesh.vertices[i],
                pip_distance: dist.expect("inside point always has a hit distance"),
            });
        }
    }
    PenetrationPointSet {
        points,
        source,
        inside_flags,
    }
}
