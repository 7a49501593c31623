//! Brute-force reference implementations: ground truth for tests and the
//! CLI's oracle mode.
//!
//! Everything here is a linear or quadratic scan and shares no query code
//! with the BVH path in [`crate::accel`], so agreement between the two is
//! evidence rather than tautology. Performance is explicitly not a goal.

use nalgebra::{Point3, Vector3};
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::mesh::TriangleMesh;
use crate::par;
use crate::rng;

/// Distance below which a point counts as lying on the surface.
pub const ON_SURFACE_EPS: f64 = 1e-9;
/// Barycentric proximity to an edge that makes a scan hit ambiguous.
const GRAZE_EPS: f64 = 1e-12;
/// Retries with fresh random directions before giving up on a parity scan.
const MAX_RETRIES: usize = 16;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("parity scan stayed ambiguous after {MAX_RETRIES} perturbation retries at ({0}, {1}, {2})")]
    Indeterminate(f64, f64, f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    OnSurface,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleVerdict {
    pub containment: Containment,
    /// True when the first ray direction hit an ambiguous configuration and
    /// the verdict comes from a re-cast.
    pub used_perturbation: bool,
}

enum ScanHit {
    Miss,
    Hit,
    /// Intersection too close to an edge, a vertex, the ray origin, or a
    /// near-parallel plane to trust in floating point.
    Ambiguous,
}

/// Möller–Trumbore with explicit ambiguity reporting. `scale` is a
/// characteristic model length used for the absolute `t` threshold.
fn scan_triangle(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
    scale: f64,
) -> ScanHit {
    let e1 = b - a;
    let e2 = c - a;
    let n = e1.cross(&e2);
    let cross_scale = e1.norm() * e2.norm();
    // zero-area triangles contribute no surface; skip them
    if n.norm() <= 1e-14 * cross_scale {
        return ScanHit::Miss;
    }

    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() <= 1e-12 * cross_scale {
        // ray nearly parallel to a real triangle: retry rather than guess
        return ScanHit::Ambiguous;
    }
    let inv_det = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv_det;
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv_det;
    let w = 1.0 - u - v;
    let t = e2.dot(&q) * inv_det;
    let t_eps = 1e-12 * scale;

    if u < -GRAZE_EPS || v < -GRAZE_EPS || w < -GRAZE_EPS || t < -t_eps {
        return ScanHit::Miss;
    }
    if u <= GRAZE_EPS || v <= GRAZE_EPS || w <= GRAZE_EPS || t <= t_eps {
        return ScanHit::Ambiguous;
    }
    ScanHit::Hit
}

/// Point-in-polyhedron by exhaustive ray parity.
///
/// Scans every triangle; any grazing configuration triggers a re-cast with a
/// fresh random direction (deterministically derived from the point), up to
/// [`MAX_RETRIES`] times. Points within [`ON_SURFACE_EPS`] of the mesh are
/// reported [`Containment::OnSurface`] without casting.
pub fn brute_pip(mesh: &TriangleMesh, point: &Point3<f64>) -> Result<OracleVerdict, OracleError> {
    let exact = point_mesh_distance(point, mesh);
    if exact < ON_SURFACE_EPS {
        return Ok(OracleVerdict {
            containment: Containment::OnSurface,
            used_perturbation: false,
        });
    }

    let scale = mesh.aabb().diagonal().norm().max(1.0);
    let mut stream = rng::stream(
        0x5ca1_ab1e,
        &[point.x.to_bits(), point.y.to_bits(), point.z.to_bits()],
    );

    'attempt: for attempt in 0..=MAX_RETRIES {
        let dir = Vector3::from(UnitSphere.sample(&mut stream));
        let mut crossings = 0u64;
        for t in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.triangle_points(t);
            match scan_triangle(point, &dir, &a, &b, &c, scale) {
                ScanHit::Miss => {}
                ScanHit::Hit => crossings += 1,
                ScanHit::Ambiguous => continue 'attempt,
            }
        }
        let containment = if crossings % 2 == 1 {
            Containment::Inside
        } else {
            Containment::Outside
        };
        return Ok(OracleVerdict {
            containment,
            used_perturbation: attempt > 0,
        });
    }
    Err(OracleError::Indeterminate(point.x, point.y, point.z))
}

/// Ids of `source` vertices strictly inside `other` (surface points count as
/// outside). Convenience for oracle-side penetration point sets.
///
/// Vertices lying at least [`ON_SURFACE_EPS`] outside the other mesh's
/// bounding box are outside by containment, so the full scan runs only for
/// vertices near or within the box.
pub fn brute_penetration_points(
    source: &TriangleMesh,
    other: &TriangleMesh,
) -> Result<Vec<u32>, OracleError> {
    let bounds = other.aabb();
    let verdicts = par::map_indexed(&source.vertices, |_, v| {
        if !bounds.contains(v, ON_SURFACE_EPS) {
            return Ok(OracleVerdict {
                containment: Containment::Outside,
                used_perturbation: false,
            });
        }
        brute_pip(other, v)
    });
    let mut ids = Vec::new();
    for (i, verdict) in verdicts.into_iter().enumerate() {
        if verdict?.containment == Containment::Inside {
            ids.push(i as u32);
        }
    }
    Ok(ids)
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn point_segment_distance_sq(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    let t = if len_sq > 0.0 {
        clamp01((p - a).dot(&ab) / len_sq)
    } else {
        0.0
    };
    ((a + ab * t) - p).norm_squared()
}

/// Exact Euclidean distance from `p` to the closed triangle `(a, b, c)` by
/// region classification on the parameter domain. Degenerate triangles fall
/// back to the nearest edge segment.
pub fn point_triangle_distance(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    let e0 = b - a;
    let e1 = c - a;
    let aa = e0.norm_squared();
    let cc = e1.norm_squared();
    let bb = e0.dot(&e1);
    let det = aa * cc - bb * bb;
    if det <= 1e-24 * aa * cc || det <= 0.0 {
        let d_sq = point_segment_distance_sq(p, a, b)
            .min(point_segment_distance_sq(p, b, c))
            .min(point_segment_distance_sq(p, c, a));
        return d_sq.sqrt();
    }

    let diff = a - p;
    let d = e0.dot(&diff);
    let e = e1.dot(&diff);
    let mut s = bb * e - cc * d;
    let mut t = bb * d - aa * e;

    if s + t <= det {
        if s < 0.0 {
            if t < 0.0 {
                // region 4
                if d < 0.0 {
                    t = 0.0;
                    s = clamp01(-d / aa);
                } else {
                    s = 0.0;
                    t = clamp01(-e / cc);
                }
            } else {
                // region 3
                s = 0.0;
                t = clamp01(-e / cc);
            }
        } else if t < 0.0 {
            // region 5
            t = 0.0;
            s = clamp01(-d / aa);
        } else {
            // region 0: interior
            s /= det;
            t /= det;
        }
    } else if s < 0.0 {
        // region 2
        let tmp0 = bb + d;
        let tmp1 = cc + e;
        if tmp1 > tmp0 {
            s = clamp01((tmp1 - tmp0) / (aa - 2.0 * bb + cc));
            t = 1.0 - s;
        } else {
            s = 0.0;
            t = clamp01(-e / cc);
        }
    } else if t < 0.0 {
        // region 6
        let tmp0 = bb + e;
        let tmp1 = aa + d;
        if tmp1 > tmp0 {
            t = clamp01((tmp1 - tmp0) / (aa - 2.0 * bb + cc));
            s = 1.0 - t;
        } else {
            t = 0.0;
            s = clamp01(-d / aa);
        }
    } else {
        // region 1
        let numer = cc + e - bb - d;
        if numer <= 0.0 {
            s = 0.0;
        } else {
            s = clamp01(numer / (aa - 2.0 * bb + cc));
        }
        t = 1.0 - s;
    }

    ((a + e0 * s + e1 * t) - p).norm()
}

/// Minimum distance from `p` to any triangle of `mesh` (linear scan).
pub fn point_mesh_distance(p: &Point3<f64>, mesh: &TriangleMesh) -> f64 {
    let mut best = f64::INFINITY;
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle_points(t);
        best = best.min(point_triangle_distance(p, &a, &b, &c));
    }
    best
}

/// Directional Hausdorff distance between two vertex clouds by double loop:
/// `max over a of min over b of |a - b|`.
pub fn brute_hausdorff_vertices(
    points_a: &[Point3<f64>],
    points_b: &[Point3<f64>],
) -> Result<f64, OracleError> {
    if points_a.is_empty() {
        return Err(OracleError::EmptyInput("points_a"));
    }
    if points_b.is_empty() {
        return Err(OracleError::EmptyInput("points_b"));
    }
    let max_min_sq = par::map_reduce(
        points_a,
        || 0.0f64,
        |_, a| {
            points_b
                .iter()
                .map(|b| (a - b).norm_squared())
                .fold(f64::INFINITY, f64::min)
        },
        f64::max,
    );
    Ok(max_min_sq.sqrt())
}

/// `max over points of min over triangles` of the exact point-triangle
/// distance: the directional point-to-surface Hausdorff distance.
pub fn brute_point_surface_h(
    points: &[Point3<f64>],
    mesh: &TriangleMesh,
) -> Result<f64, OracleError> {
    if points.is_empty() {
        return Err(OracleError::EmptyInput("points"));
    }
    if mesh.triangles.is_empty() {
        return Err(OracleError::EmptyInput("triangles"));
    }
    Ok(par::map_reduce(
        points,
        || 0.0f64,
        |_, p| point_mesh_distance(p, mesh),
        f64::max,
    ))
}
