//! Sampled directional Hausdorff distance between penetration surfaces, and
//! the full penetration-depth pipeline.
//!
//! For every source point the distance to the opposing surface is estimated
//! by casting rays along sampled directions and keeping the nearest hit.
//! With the vertex strategy each ray aims at a sampled vertex of the target
//! surface, so the aim distance itself is a valid upper bound: the running
//! minimum folds both in. Ray-length adaptation culling shrinks each
//! subsequent ray to the current minimum; it never changes the result, only
//! the amount of traversal work.
//!
//! Directions for one source point are processed sequentially (culling
//! threads the shrinking bound through them); source points are processed
//! in parallel and combined with an order-independent max-reduction.

use std::time::Instant;

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::accel::{Bvh, BuildError, Ray, TraversalStats};
use crate::mesh::{check_closed, Aabb, TriangleMesh};
use crate::par;
use crate::pip::{self, PenetrationPointSet, SourceObject};
use crate::psurf::{build_penetration_surface, PenetrationSurface, SurfaceError};
use crate::rng;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("mesh {0} is not closed (every edge must be shared by exactly two triangles)")]
    NotClosed(char),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// How ray directions are chosen for each source point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingStrategy {
    /// Aim at every `stride`-th vertex of the target surface, where
    /// `stride = max(1, floor(1 / rate))` and the seed shifts the phase.
    VertexUniform { rate: f64, seed: u64 },
    /// Directions drawn uniformly from the unit sphere, one stream per
    /// source point.
    Sphere { count: usize, seed: u64 },
    /// Directions toward points drawn uniformly inside the target surface's
    /// bounding box.
    AabbBox { count: usize, seed: u64 },
}

impl SamplingStrategy {
    pub fn seed(&self) -> u64 {
        match *self {
            SamplingStrategy::VertexUniform { seed, .. }
            | SamplingStrategy::Sphere { seed, .. }
            | SamplingStrategy::AabbBox { seed, .. } => seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HdistConfig {
    pub strategy: SamplingStrategy,
    /// Ray-length adaptation culling.
    pub culling: bool,
    /// Use each point's PIP hit distance to filter sampled vertices and cap
    /// the initial ray length.
    pub dpip_filter: bool,
}

impl Default for HdistConfig {
    fn default() -> Self {
        HdistConfig {
            strategy: SamplingStrategy::VertexUniform { rate: 0.01, seed: 0 },
            culling: true,
            dpip_filter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// A penetration point set came up empty; the reported depth is zero.
    NoOverlap,
}

#[derive(Debug, Clone)]
pub struct HdistResult {
    pub h_ab: f64,
    pub h_ba: f64,
    /// `max(h_ab, h_ba)`.
    pub depth: f64,
    /// Source vertex ids attaining the two directional maxima.
    pub witness_ab: Option<u32>,
    pub witness_ba: Option<u32>,
    pub stats: TraversalStats,
    pub status: RunStatus,
}

/// Wall-clock stage split in milliseconds: classification, surface
/// generation, distance computation.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub pip_ms: f64,
    pub psg_ms: f64,
    pub hdist_ms: f64,
}

/// One ray of the vertex strategy: where it points and how far its target
/// vertex is. `direction` is `None` when the target coincides with the
/// query point (distance zero, nothing to cast).
#[derive(Debug, Clone, Copy)]
pub struct AimedDirection {
    pub direction: Option<Vector3<f64>>,
    pub target_distance: f64,
}

/// Per-point direction sample.
#[derive(Debug, Clone)]
pub enum DirectionSet {
    /// Rays aimed at sampled target vertices; the aim distances double as
    /// upper bounds on the point's distance to the surface.
    Aimed(Vec<AimedDirection>),
    /// Free directions with no per-ray bound.
    Free(Vec<Vector3<f64>>),
}

/// Strided vertex selection: indices `{s0, s0 + stride, ...}` with
/// `s0 = seed mod stride`. With `max_distance` set, selected vertices
/// farther than the bound are skipped; if that empties the selection, the
/// single nearest target vertex is used so the result is never empty.
pub fn sample_directions_vertex(
    query: &Point3<f64>,
    targets: &[Point3<f64>],
    rate: f64,
    seed: u64,
    max_distance: Option<f64>,
) -> DirectionSet {
    assert!(!targets.is_empty(), "vertex sampling needs a non-empty target list");
    assert!(rate > 0.0 && rate <= 1.0, "sampling rate must be in (0, 1]");
    let stride = ((1.0 / rate).floor() as usize).max(1);
    let s0 = (seed % stride as u64) as usize;

    let aimed = |idx: usize| -> AimedDirection {
        let offset = targets[idx] - query;
        let target_distance = offset.norm();
        let direction = (target_distance > 0.0).then(|| offset / target_distance);
        AimedDirection {
            direction,
            target_distance,
        }
    };

    let mut out = Vec::with_capacity(targets.len() / stride + 1);
    let mut idx = s0;
    while idx < targets.len() {
        let a = aimed(idx);
        if max_distance.is_none_or(|m| a.target_distance <= m) {
            out.push(a);
        }
        idx += stride;
    }
    if out.is_empty() {
        // everything was filtered out; keep the nearest vertex overall
        let nearest = (0..targets.len())
            .min_by(|&i, &j| {
                let di = (targets[i] - query).norm_squared();
                let dj = (targets[j] - query).norm_squared();
                di.partial_cmp(&dj).unwrap().then(i.cmp(&j))
            })
            .unwrap();
        out.push(aimed(nearest));
    }
    DirectionSet::Aimed(out)
}

/// `count` directions uniform on the unit sphere from the stream `seed`.
pub fn sample_directions_sphere(count: usize, seed: u64) -> DirectionSet {
    assert!(count >= 1);
    let mut stream = rng::stream(seed, &[]);
    let dirs = (0..count)
        .map(|_| Vector3::from(UnitSphere.sample(&mut stream)))
        .collect();
    DirectionSet::Free(dirs)
}

/// `count` directions toward points uniform in `target_aabb`. Draws that
/// coincide with the query are rejected and redrawn.
pub fn sample_directions_aabb(
    query: &Point3<f64>,
    target_aabb: &Aabb,
    count: usize,
    seed: u64,
) -> DirectionSet {
    assert!(count >= 1);
    let mut stream = rng::stream(seed, &[]);
    let extent = target_aabb.diagonal();
    let mut dirs = Vec::with_capacity(count);
    while dirs.len() < count {
        let mut candidate = None;
        for _ in 0..64 {
            let p = Point3::new(
                target_aabb.min.x + stream.random::<f64>() * extent.x,
                target_aabb.min.y + stream.random::<f64>() * extent.y,
                target_aabb.min.z + stream.random::<f64>() * extent.z,
            );
            let offset = p - query;
            let n = offset.norm();
            if n > 0.0 {
                candidate = Some(offset / n);
                break;
            }
        }
        // only reachable when the box degenerates to the query point itself
        dirs.push(candidate.unwrap_or_else(Vector3::x));
    }
    DirectionSet::Free(dirs)
}

/// Minimum distance from `query` to the target surface over the sampled
/// rays. Directions run sequentially; with `culling` each ray is capped at
/// the current minimum, otherwise at `init_tmax`.
///
/// For aimed rays the target-vertex distances join the minimum directly, so
/// the result never exceeds the nearest sampled vertex. For free rays the
/// result falls back to `init_tmax` when every ray misses, which is the
/// infinity sentinel when `init_tmax` is unbounded; callers skip such
/// points.
pub fn min_distance_for_point(
    bvh: &Bvh,
    query: &Point3<f64>,
    rays: &DirectionSet,
    culling: bool,
    init_tmax: f64,
    stats: &mut TraversalStats,
) -> f64 {
    let mut current = init_tmax;
    let cast = |dir: &Vector3<f64>, current: f64, stats: &mut TraversalStats| -> Option<f64> {
        let limit = if culling { current } else { init_tmax };
        if limit <= 0.0 {
            return None;
        }
        let mut ray = Ray::new(*query, *dir);
        if limit.is_finite() {
            ray = ray.with_t_max(limit);
        }
        bvh.closest_hit(&ray, stats).map(|h| h.t)
    };

    match rays {
        DirectionSet::Aimed(list) => {
            for aimed in list {
                current = current.min(aimed.target_distance);
                if let Some(dir) = &aimed.direction {
                    if let Some(t) = cast(dir, current, stats) {
                        current = current.min(t);
                    }
                }
            }
        }
        DirectionSet::Free(dirs) => {
            for dir in dirs {
                if let Some(t) = cast(dir, current, stats) {
                    current = current.min(t);
                }
            }
        }
    }
    current
}

#[derive(Debug, Clone, Copy)]
pub struct DirectionalResult {
    pub h: f64,
    /// Source vertex id attaining the maximum (ties go to the smaller id);
    /// `None` when no source point produced a finite minimum.
    pub witness: Option<u32>,
    pub stats: TraversalStats,
}

/// Directional Hausdorff distance `max over sources of min distance to
/// target`, per the configured sampling strategy.
pub fn directional_hausdorff(
    sources: &PenetrationPointSet,
    target: &PenetrationSurface,
    config: &HdistConfig,
) -> DirectionalResult {
    assert!(!sources.is_empty(), "directional distance needs source points");
    let bvh = target
        .bvh
        .as_ref()
        .expect("directional distance needs a non-empty target surface");
    let target_aabb = target.aabb();
    let source_tag = sources.source.tag();

    type Acc = (f64, Option<u32>, TraversalStats);
    let identity = || (f64::NEG_INFINITY, None, TraversalStats::default());
    let combine = |a: Acc, b: Acc| -> Acc {
        let mut stats = a.2;
        stats.merge(&b.2);
        let (h, witness) = match (a.1, b.1) {
            (None, _) => (b.0, b.1),
            (_, None) => (a.0, a.1),
            (Some(wa), Some(wb)) => {
                if a.0 > b.0 || (a.0 == b.0 && wa < wb) {
                    (a.0, Some(wa))
                } else {
                    (b.0, Some(wb))
                }
            }
        };
        (h, witness, stats)
    };

    let (h, witness, stats) = par::map_reduce(
        &sources.points,
        identity,
        |_, point| {
            let mut local = TraversalStats::default();
            let rays = match config.strategy {
                SamplingStrategy::VertexUniform { rate, seed } => sample_directions_vertex(
                    &point.position,
                    &target.vertices,
                    rate,
                    seed,
                    config.dpip_filter.then_some(point.pip_distance),
                ),
                SamplingStrategy::Sphere { count, seed } => sample_directions_sphere(
                    count,
                    rng::mix(seed, &[source_tag, point.vertex_id as u64]),
                ),
                SamplingStrategy::AabbBox { count, seed } => sample_directions_aabb(
                    &point.position,
                    &target_aabb,
                    count,
                    rng::mix(seed, &[source_tag, point.vertex_id as u64]),
                ),
            };
            let init = if config.dpip_filter {
                point.pip_distance
            } else {
                f64::INFINITY
            };
            let d = min_distance_for_point(bvh, &point.position, &rays, config.culling, init, &mut local);
            if d.is_finite() {
                (d, Some(point.vertex_id), local)
            } else {
                // every free ray missed with an unbounded cap: no estimate
                (f64::NEG_INFINITY, None, local)
            }
        },
        combine,
    );

    DirectionalResult {
        h: if witness.is_some() { h } else { 0.0 },
        witness,
        stats,
    }
}

/// Full pipeline with per-stage wall-clock timings.
pub fn penetration_depth_timed(
    mesh_a: &TriangleMesh,
    mesh_b: &TriangleMesh,
    config: &HdistConfig,
) -> Result<(HdistResult, StageTimings), PipelineError> {
    if !check_closed(mesh_a) {
        return Err(PipelineError::NotClosed('A'));
    }
    if !check_closed(mesh_b) {
        return Err(PipelineError::NotClosed('B'));
    }
    let mut timings = StageTimings::default();
    let mut stats = TraversalStats::default();
    let axis = pip::default_axis();

    let t0 = Instant::now();
    let bvh_a = Bvh::build(&mesh_a.vertices, &mesh_a.triangles)?;
    let bvh_b = Bvh::build(&mesh_b.vertices, &mesh_b.triangles)?;
    let set_a = pip::extract_penetration_points(&bvh_b, mesh_a, SourceObject::A, &axis, &mut stats);
    let set_b = pip::extract_penetration_points(&bvh_a, mesh_b, SourceObject::B, &axis, &mut stats);
    timings.pip_ms = t0.elapsed().as_secs_f64() * 1e3;

    let no_overlap = |stats: TraversalStats, timings: StageTimings| {
        (
            HdistResult {
                h_ab: 0.0,
                h_ba: 0.0,
                depth: 0.0,
                witness_ab: None,
                witness_ba: None,
                stats,
                status: RunStatus::NoOverlap,
            },
            timings,
        )
    };
    if set_a.is_empty() || set_b.is_empty() {
        return Ok(no_overlap(stats, timings));
    }

    let t1 = Instant::now();
    let surf_a = build_penetration_surface(mesh_a, &set_a)?;
    let surf_b = build_penetration_surface(mesh_b, &set_b)?;
    timings.psg_ms = t1.elapsed().as_secs_f64() * 1e3;
    if surf_a.is_empty() || surf_b.is_empty() || surf_a.point_set.is_empty() || surf_b.point_set.is_empty() {
        return Ok(no_overlap(stats, timings));
    }

    let t2 = Instant::now();
    let ab = directional_hausdorff(&surf_a.point_set, &surf_b, config);
    let ba = directional_hausdorff(&surf_b.point_set, &surf_a, config);
    timings.hdist_ms = t2.elapsed().as_secs_f64() * 1e3;
    stats.merge(&ab.stats);
    stats.merge(&ba.stats);

    Ok((
        HdistResult {
            h_ab: ab.h,
            h_ba: ba.h,
            depth: ab.h.max(ba.h),
            witness_ab: ab.witness,
            witness_ba: ba.witness,
            stats,
            status: RunStatus::Ok,
        },
        timings,
    ))
}

/// Bidirectional penetration depth: both point classifications, both
/// penetration surfaces, and the larger of the two directional distances.
pub fn penetration_depth(
    mesh_a: &TriangleMesh,
    mesh_b: &TriangleMesh,
    config: &HdistConfig,
) -> Result<HdistResult, PipelineError> {
    penetration_depth_timed(mesh_a, mesh_b, config).map(|(result, _)| result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_overlap_scene, Axis};
    use crate::oracle;
    use crate::pip::PenetrationPoint;
    use crate::shapes;

    /// Vertex-pair oracle depth for unit icospheres with centers 1 apart,
    /// computed with the brute-force oracle ahead of this module.
    const ICO3_PAIR_ORACLE_DEPTH: f64 = 0.99999999999999978;

    fn surface_of_whole_mesh(mesh: &TriangleMesh, source: SourceObject) -> PenetrationSurface {
        let flags = vec![true; mesh.vertex_count()];
        let points = (0..mesh.vertex_count())
            .map(|i| PenetrationPoint {
                vertex_id: i as u32,
                position: mesh.vertices[i],
                pip_distance: f64::INFINITY,
            })
            .collect();
        let set = PenetrationPointSet {
            points,
            source,
            inside_flags: flags,
        };
        build_penetration_surface(mesh, &set).unwrap()
    }

    #[test]
    fn vertex_sampling_rate_one_takes_every_target() {
        let targets: Vec<Point3<f64>> = (0..7).map(|i| Point3::new(i as f64, 1.0, 0.0)).collect();
        let DirectionSet::Aimed(list) =
            sample_directions_vertex(&Point3::origin(), &targets, 1.0, 0, None)
        else {
            panic!("vertex strategy must aim");
        };
        assert_eq!(list.len(), 7);
        for a in &list {
            let d = a.direction.unwrap();
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_sampling_stride_arithmetic() {
        let targets: Vec<Point3<f64>> = (0..200).map(|i| Point3::new(i as f64, 1.0, 0.0)).collect();
        let DirectionSet::Aimed(list) =
            sample_directions_vertex(&Point3::origin(), &targets, 0.01, 0, None)
        else {
            panic!();
        };
        // stride 100, phase 0: indices 0 and 100
        assert_eq!(list.len(), 2);
        assert_eq!(list[0].target_distance, 1.0);
        assert_eq!(list[1].target_distance, (100.0f64 * 100.0 + 1.0).sqrt());

        let DirectionSet::Aimed(shifted) =
            sample_directions_vertex(&Point3::origin(), &targets, 0.01, 137, None)
        else {
            panic!();
        };
        assert_eq!(shifted.len(), 2);
        assert_eq!(shifted[0].target_distance, (37.0f64 * 37.0 + 1.0).sqrt());
    }

    #[test]
    fn vertex_sampling_distance_filter() {
        let targets = vec![Point3::new(0.1, 0.0, 0.0), Point3::new(0.9, 0.0, 0.0)];
        let DirectionSet::Aimed(list) =
            sample_directions_vertex(&Point3::origin(), &targets, 1.0, 0, Some(0.5))
        else {
            panic!();
        };
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].target_distance, 0.1);

        // filter empties the selection: nearest target survives
        let DirectionSet::Aimed(fallback) =
            sample_directions_vertex(&Point3::origin(), &targets, 1.0, 0, Some(0.01))
        else {
            panic!();
        };
        assert_eq!(fallback.len(), 1);
        assert_eq!(fallback[0].target_distance, 0.1);
    }

    #[test]
    fn sphere_sampling_is_deterministic_and_unit() {
        let DirectionSet::Free(a) = sample_directions_sphere(1, 42) else {
            panic!();
        };
        let DirectionSet::Free(b) = sample_directions_sphere(1, 42) else {
            panic!();
        };
        assert_eq!(a[0], b[0]);
        assert!((a[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_sampling_mean_is_small() {
        let DirectionSet::Free(dirs) = sample_directions_sphere(10_000, 3) else {
            panic!();
        };
        let mean: Vector3<f64> = dirs.iter().sum::<Vector3<f64>>() / dirs.len() as f64;
        // 1/sqrt(n) = 0.01; allow three sigma
        assert!(mean.norm() < 0.05, "mean {}", mean.norm());
    }

    #[test]
    fn aabb_sampling_degenerate_box() {
        let p = Point3::new(3.0, 0.0, 0.0);
        let bb = Aabb {
            min: p,
            max: p,
        };
        let DirectionSet::Free(dirs) = sample_directions_aabb(&Point3::origin(), &bb, 5, 9) else {
            panic!();
        };
        for d in dirs {
            assert!((d - Vector3::x()).norm() < 1e-12);
        }
    }

    #[test]
    fn aabb_sampling_centered_mean_is_small() {
        let bb = Aabb {
            min: Point3::new(-1.0, -1.0, -1.0),
            max: Point3::new(1.0, 1.0, 1.0),
        };
        let DirectionSet::Free(dirs) = sample_directions_aabb(&Point3::origin(), &bb, 10_000, 5)
        else {
            panic!();
        };
        let mean: Vector3<f64> = dirs.iter().sum::<Vector3<f64>>() / dirs.len() as f64;
        assert!(mean.norm() < 0.05, "mean {}", mean.norm());
        let DirectionSet::Free(again) = sample_directions_aabb(&Point3::origin(), &bb, 3, 5) else {
            panic!();
        };
        assert_eq!(&dirs[..3], &again[..]);
    }

    /// Three gridded walls at distances 5, 3, 4 along +x, +y, +z. Fine
    /// enough that each wall occupies its own BVH subtree.
    fn three_walls() -> TriangleMesh {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let n = 8u32;
        let s = 10.0;
        let mut wall = |at: fn(f64, f64) -> Point3<f64>| {
            let base = vertices.len() as u32;
            for j in 0..=n {
                for i in 0..=n {
                    let u = -s + 2.0 * s * i as f64 / n as f64;
                    let v = -s + 2.0 * s * j as f64 / n as f64;
                    vertices.push(at(u, v));
                }
            }
            let idx = |i: u32, j: u32| base + j * (n + 1) + i;
            for j in 0..n {
                for i in 0..n {
                    triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                    triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                }
            }
        };
        wall(|u, v| Point3::new(5.0, u, v));
        wall(|u, v| Point3::new(u, 3.0, v));
        wall(|u, v| Point3::new(u, v, 4.0));
        TriangleMesh::new(vertices, triangles)
    }

    #[test]
    fn min_distance_culling_keeps_result_and_saves_work() {
        let walls = three_walls();
        let bvh = Bvh::build(&walls.vertices, &walls.triangles).unwrap();
        let dirs = DirectionSet::Free(vec![Vector3::x(), Vector3::y(), Vector3::z()]);

        let mut culled_stats = TraversalStats::default();
        let culled = min_distance_for_point(
            &bvh,
            &Point3::origin(),
            &dirs,
            true,
            f64::INFINITY,
            &mut culled_stats,
        );
        let mut full_stats = TraversalStats::default();
        let full = min_distance_for_point(
            &bvh,
            &Point3::origin(),
            &dirs,
            false,
            f64::INFINITY,
            &mut full_stats,
        );
        assert_eq!(culled, 3.0);
        assert_eq!(full, 3.0);
        assert_eq!(culled_stats.rays_cast, 3);
        // the z ray is culled at t_max 3 before reaching the wall at 4
        assert!(culled_stats.triangle_tests < full_stats.triangle_tests);
    }

    #[test]
    fn min_distance_miss_returns_sentinel_or_cap() {
        let walls = three_walls();
        let bvh = Bvh::build(&walls.vertices, &walls.triangles).unwrap();
        let away = DirectionSet::Free(vec![-Vector3::x()]);
        let mut stats = TraversalStats::default();
        let unbounded = min_distance_for_point(
            &bvh,
            &Point3::origin(),
            &away,
            true,
            f64::INFINITY,
            &mut stats,
        );
        assert!(unbounded.is_infinite());
        let capped =
            min_distance_for_point(&bvh, &Point3::origin(), &away, true, 7.5, &mut stats);
        assert_eq!(capped, 7.5);
    }

    #[test]
    fn directional_self_distance_is_zero() {
        let ico = shapes::icosphere(2);
        let surf = surface_of_whole_mesh(&ico, SourceObject::B);
        let sources = surf.point_set.clone();
        let config = HdistConfig {
            strategy: SamplingStrategy::VertexUniform { rate: 1.0, seed: 0 },
            culling: true,
            dpip_filter: false,
        };
        let r = directional_hausdorff(&sources, &surf, &config);
        assert!(r.h.abs() <= 1e-9, "self distance {}", r.h);
        assert!(r.witness.is_some());
    }

    #[test]
    fn directional_two_point_example() {
        // fan of four triangles around a center vertex at the origin
        let quad = TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(0.0, -2.0, -2.0),
                Point3::new(0.0, 2.0, -2.0),
                Point3::new(0.0, 2.0, 2.0),
                Point3::new(0.0, -2.0, 2.0),
            ],
            vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]],
        );
        let target = surface_of_whole_mesh(&quad, SourceObject::B);
        let sources = PenetrationPointSet {
            points: vec![
                PenetrationPoint {
                    vertex_id: 0,
                    position: Point3::new(0.0, 0.0, 0.0),
                    pip_distance: f64::INFINITY,
                },
                PenetrationPoint {
                    vertex_id: 1,
                    position: Point3::new(1.0, 0.0, 0.0),
                    pip_distance: f64::INFINITY,
                },
            ],
            source: SourceObject::A,
            inside_flags: vec![true, true],
        };
        let config = HdistConfig {
            strategy: SamplingStrategy::VertexUniform { rate: 1.0, seed: 0 },
            culling: true,
            dpip_filter: false,
        };
        let r = directional_hausdorff(&sources, &target, &config);
        assert!((r.h - 1.0).abs() < 1e-12);
        assert_eq!(r.witness, Some(1));
    }

    #[test]
    fn icosphere_pair_brackets_and_frozen_oracle() {
        let a = shapes::icosphere(3);
        let b = a.translated(Vector3::x());

        // the oracle value frozen ahead of this module must reproduce
        let pa: Vec<Point3<f64>> = oracle::brute_penetration_points(&a, &b)
            .unwrap()
            .iter()
            .map(|&i| a.vertices[i as usize])
            .collect();
        let pb: Vec<Point3<f64>> = oracle::brute_penetration_points(&b, &a)
            .unwrap()
            .iter()
            .map(|&i| b.vertices[i as usize])
            .collect();
        let oracle_depth = oracle::brute_hausdorff_vertices(&pa, &pb)
            .unwrap()
            .max(oracle::brute_hausdorff_vertices(&pb, &pa).unwrap());
        assert!(
            (oracle_depth - ICO3_PAIR_ORACLE_DEPTH).abs() < 1e-12,
            "oracle drifted: {oracle_depth}"
        );

        let config = HdistConfig {
            strategy: SamplingStrategy::VertexUniform { rate: 1.0, seed: 0 },
            culling: true,
            dpip_filter: false,
        };
        let result = penetration_depth(&a, &b, &config).unwrap();
        assert_eq!(result.status, RunStatus::Ok);

        // full-rate bracket: surface distance <= computed <= vertex pairs
        let surf_a = {
            let bvh_b = Bvh::build(&b.vertices, &b.triangles).unwrap();
            let mut stats = TraversalStats::default();
            let set = pip::extract_penetration_points(
                &bvh_b,
                &a,
                SourceObject::A,
                &pip::default_axis(),
                &mut stats,
            );
            build_penetration_surface(&a, &set).unwrap()
        };
        let surf_b = {
            let bvh_a = Bvh::build(&a.vertices, &a.triangles).unwrap();
            let mut stats = TraversalStats::default();
            let set = pip::extract_penetration_points(
                &bvh_a,
                &b,
                SourceObject::B,
                &pip::default_axis(),
                &mut stats,
            );
            build_penetration_surface(&b, &set).unwrap()
        };
        let src_a: Vec<Point3<f64>> =
            surf_a.point_set.points.iter().map(|p| p.position).collect();
        let src_b: Vec<Point3<f64>> =
            surf_b.point_set.points.iter().map(|p| p.position).collect();
        let lower = oracle::brute_point_surface_h(&src_a, &surf_b.to_mesh())
            .unwrap()
            .max(oracle::brute_point_surface_h(&src_b, &surf_a.to_mesh()).unwrap());
        let upper = oracle::brute_hausdorff_vertices(&src_a, &surf_b.vertices)
            .unwrap()
            .max(oracle::brute_hausdorff_vertices(&src_b, &surf_a.vertices).unwrap());
        assert!(
            lower - 1e-9 <= result.depth && result.depth <= upper + 1e-9,
            "depth {} outside [{lower}, {upper}]",
            result.depth
        );
    }

    #[test]
    fn disjoint_and_identical_scenes() {
        let cube = shapes::unit_cube();
        let far = cube.translated(Vector3::new(5.0, 0.0, 0.0));
        let config = HdistConfig::default();
        let r = penetration_depth(&cube, &far, &config).unwrap();
        assert_eq!(r.status, RunStatus::NoOverlap);
        assert_eq!(r.depth, 0.0);
        assert_eq!(r.witness_ab, None);

        let full_rate = HdistConfig {
            strategy: SamplingStrategy::VertexUniform { rate: 1.0, seed: 0 },
            ..HdistConfig::default()
        };
        let same = penetration_depth(&cube, &cube.clone(), &full_rate).unwrap();
        assert!(same.depth.abs() <= 1e-9);
    }

    #[test]
    fn open_mesh_rejected() {
        let mut open = shapes::unit_cube();
        open.triangles.truncate(10);
        let closed = shapes::unit_cube();
        assert!(matches!(
            penetration_depth(&open, &closed, &HdistConfig::default()),
            Err(PipelineError::NotClosed('A'))
        ));
        assert!(matches!(
            penetration_depth(&closed, &open, &HdistConfig::default()),
            Err(PipelineError::NotClosed('B'))
        ));
    }

    #[test]
    fn culling_is_neutral_and_cheaper() {
        let ico = shapes::icosphere(2);
        let (a, b) = make_overlap_scene(&ico, 0.5, Axis::X).unwrap();
        for strategy in [
            SamplingStrategy::VertexUniform { rate: 0.05, seed: 11 },
            SamplingStrategy::Sphere { count: 24, seed: 11 },
            SamplingStrategy::AabbBox { count: 24, seed: 11 },
        ] {
            for dpip_filter in [false, true] {
                let on = penetration_depth(
                    &a,
                    &b,
                    &HdistConfig {
                        strategy,
                        culling: true,
                        dpip_filter,
                    },
                )
                .unwrap();
                let off = penetration_depth(
                    &a,
                    &b,
                    &HdistConfig {
                        strategy,
                        culling: false,
                        dpip_filter,
                    },
                )
                .unwrap();
                assert_eq!(on.h_ab.to_bits(), off.h_ab.to_bits(), "{strategy:?}");
                assert_eq!(on.h_ba.to_bits(), off.h_ba.to_bits(), "{strategy:?}");
                assert_eq!(on.witness_ab, off.witness_ab);
                assert_eq!(on.witness_ba, off.witness_ba);
                assert!(
                    on.stats.triangle_tests <= off.stats.triangle_tests,
                    "{strategy:?} culling did more work"
                );
            }
        }
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let ico = shapes::icosphere(2);
        let (a, b) = make_overlap_scene(&ico, 0.4, Axis::X).unwrap();
        let config = HdistConfig {
            strategy: SamplingStrategy::Sphere { count: 16, seed: 7 },
            culling: true,
            dpip_filter: true,
        };
        let r1 = penetration_depth(&a, &b, &config).unwrap();
        let r2 = penetration_depth(&a, &b, &config).unwrap();
        assert_eq!(r1.depth.to_bits(), r2.depth.to_bits());
        assert_eq!(r1.witness_ab, r2.witness_ab);
        assert_eq!(r1.stats, r2.stats);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn thread_count_does_not_change_results() {
        let ico = shapes::icosphere(2);
        let (a, b) = make_overlap_scene(&ico, 0.5, Axis::X).unwrap();
        let config = HdistConfig::default();
        let wide = penetration_depth(&a, &b, &config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let narrow = pool.install(|| penetration_depth(&a, &b, &config).unwrap());
        assert_eq!(wide.depth.to_bits(), narrow.depth.to_bits());
        assert_eq!(wide.h_ab.to_bits(), narrow.h_ab.to_bits());
        assert_eq!(wide.witness_ab, narrow.witness_ab);
        assert_eq!(wide.witness_ba, narrow.witness_ba);
        assert_eq!(wide.stats, narrow.stats);
    }

    #[test]
    fn timings_are_populated() {
        let ico = shapes::icosphere(2);
        let (a, b) = make_overlap_scene(&ico, 0.5, Axis::X).unwrap();
        let (result, timings) =
            penetration_depth_timed(&a, &b, &HdistConfig::default()).unwrap();
        assert_eq!(result.status, RunStatus::Ok);
        assert!(timings.pip_ms >= 0.0 && timings.hdist_ms >= 0.0 && timings.psg_ms >= 0.0);
    }
}
