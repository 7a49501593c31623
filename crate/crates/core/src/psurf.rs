//! Penetration surface generation: compacting the triangles that touch a
//! penetration point into a standalone sub-mesh.
//!
//! The construction runs in three bulk passes - collect the triangles with a
//! flagged vertex, extract the sorted set of referenced vertex ids, then
//! remap indices through a lookup table - so each pass stays a flat,
//! order-independent transformation.

use nalgebra::Point3;
use thiserror::Error;

use crate::accel::{Bvh, BuildError};
use crate::mesh::{Aabb, TriangleMesh};
use crate::pip::PenetrationPointSet;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("triangle references vertex {0} with no lookup entry")]
    MissingLookupEntry(u32),
    #[error("inside flags cover {flags} vertices but the mesh has {vertices}")]
    FlagLengthMismatch { flags: usize, vertices: usize },
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// Triangles of the source mesh with at least one flagged vertex, in
/// original order, still using original vertex indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceTriangleList {
    pub triangles: Vec<[u32; 3]>,
    pub source_triangle_ids: Vec<u32>,
}

/// Strictly increasing original vertex ids referenced by a triangle list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexIdList {
    pub ids: Vec<u32>,
}

/// Old-index to compact-index map, sized to the original vertex count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    entries: Vec<u32>,
}

impl LookupTable {
    pub const ABSENT: u32 = u32::MAX;

    pub fn get(&self, original: u32) -> Option<u32> {
        match self.entries.get(original as usize) {
            Some(&e) if e != Self::ABSENT => Some(e),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw(&self) -> &[u32] {
        &self.entries
    }
}

/// Compacted sub-mesh of the triangles touching the penetration region,
/// its ray-query structure, and the inside points that will source rays.
#[derive(Debug, Clone)]
pub struct PenetrationSurface {
    /// Compacted vertex positions (bit-equal to the originals).
    pub vertices: Vec<Point3<f64>>,
    /// Triangles remapped into the compacted list.
    pub triangles: Vec<[u32; 3]>,
    /// Original ids of the surface triangles, parallel to `triangles`.
    pub source_triangle_ids: Vec<u32>,
    /// The penetration points restricted to vertices this surface uses.
    pub point_set: PenetrationPointSet,
    /// Query structure over the remapped triangles; `None` iff empty.
    pub bvh: Option<Bvh>,
}

impl PenetrationSurface {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// View as a plain mesh (for export or oracle scans).
    pub fn to_mesh(&self) -> TriangleMesh {
        TriangleMesh::new(self.vertices.clone(), self.triangles.clone())
    }
}

/// Pass 1: every triangle with >= 1 flagged vertex, original order.
pub fn collect_penetration_triangles(
    mesh: &TriangleMesh,
    inside_flags: &[bool],
) -> Result<SurfaceTriangleList, SurfaceError> {
    if inside_flags.len() != mesh.vertex_count() {
        return Err(SurfaceError::FlagLengthMismatch {
            flags: inside_flags.len(),
            vertices: mesh.vertex_count(),
        });
    }
    let mut triangles = Vec::new();
    let mut source_triangle_ids = Vec::new();
    for (i, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&v| inside_flags[v as usize]) {
            triangles.push(*tri);
            source_triangle_ids.push(i as u32);
        }
    }
    Ok(SurfaceTriangleList {
        triangles,
        source_triangle_ids,
    })
}

/// Pass 2: sorted, deduplicated union of all referenced vertex ids.
pub fn extract_unique_vertices(list: &SurfaceTriangleList) -> VertexIdList {
    let mut ids: Vec<u32> = list.triangles.iter().flatten().copied().collect();
    ids.sort_unstable();
    ids.dedup();
    VertexIdList { ids }
}

/// Pass 3a: gather the referenced vertices and record their new indices.
pub fn compact_vertices(
    mesh: &TriangleMesh,
    ids: &VertexIdList,
) -> (Vec<Point3<f64>>, LookupTable) {
    let mut entries = vec![LookupTable::ABSENT; mesh.vertex_count()];
    let mut compacted = Vec::with_capacity(ids.ids.len());
    for (new_index, &old) in ids.ids.iter().enumerate() {
        compacted.push(mesh.vertices[old as usize]);
        entries[old as usize] = new_index as u32;
    }
    (compacted, LookupTable { entries })
}

/// Pass 3b: rewrite triangle indices through the lookup table.
pub fn remap_triangles(
    list: &SurfaceTriangleList,
    lookup: &LookupTable,
) -> Result<Vec<[u32; 3]>, SurfaceError> {
    list.triangles
        .iter()
        .map(|tri| {
            let mut out = [0u32; 3];
            for (slot, &old) in out.iter_mut().zip(tri.iter()) {
                *slot = lookup
                    .get(old)
                    .ok_or(SurfaceError::MissingLookupEntry(old))?;
            }
            Ok(out)
        })
        .collect()
}

/// Full construction: the three passes plus the query structure. An empty
/// point set yields an explicit empty surface with no BVH.
pub fn build_penetration_surface(
    mesh: &TriangleMesh,
    point_set: &PenetrationPointSet,
) -> Result<PenetrationSurface, SurfaceError> {
    let list = collect_penetration_triangles(mesh, &point_set.inside_flags)?;
    let ids = extract_unique_vertices(&list);
    let (vertices, lookup) = compact_vertices(mesh, &ids);
    let triangles = remap_triangles(&list, &lookup)?;

    // drop ray sources not referenced by any surface triangle (possible only
    // for vertices no triangle uses at all)
    let points = point_set
        .points
        .iter()
        .filter(|p| lookup.get(p.vertex_id).is_some())
        .copied()
        .collect();
    let point_set = PenetrationPointSet {
        points,
        source: point_set.source,
        inside_flags: point_set.inside_flags.clone(),
    };

    let bvh = if triangles.is_empty() {
        None
    } else {
        Some(Bvh::build(&vertices, &triangles)?)
    };
    Ok(PenetrationSurface {
        vertices,
        triangles,
        source_triangle_ids: list.source_triangle_ids,
        point_set,
        bvh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::TraversalStats;
    use crate::mesh::{make_overlap_scene, Axis};
    use crate::pip::{self, SourceObject};
    use crate::shapes;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn two_tris() -> TriangleMesh {
        TriangleMesh::new(
            (0..5)
                .map(|i| Point3::new(i as f64, (i * i) as f64, 0.5 * i as f64))
                .collect(),
            vec![[0, 1, 2], [2, 3, 4]],
        )
    }

    #[test]
    fn collect_examples() {
        let mesh = two_tris();
        let none = collect_penetration_triangles(&mesh, &[false; 5]).unwrap();
        assert!(none.triangles.is_empty());

        let mut flags = [false; 5];
        flags[3] = true;
        let one = collect_penetration_triangles(&mesh, &flags).unwrap();
        assert_eq!(one.triangles, vec![[2, 3, 4]]);
        assert_eq!(one.source_triangle_ids, vec![1]);

        let mut flags = [false; 5];
        flags[2] = true; // shared by both triangles
        let both = collect_penetration_triangles(&mesh, &flags).unwrap();
        assert_eq!(both.triangles.len(), 2);
    }

    #[test]
    fn collect_rejects_bad_flag_length() {
        let mesh = two_tris();
        assert!(matches!(
            collect_penetration_triangles(&mesh, &[false; 3]),
            Err(SurfaceError::FlagLengthMismatch { .. })
        ));
    }

    #[test]
    fn unique_vertex_examples() {
        let one = SurfaceTriangleList {
            triangles: vec![[2, 3, 4]],
            source_triangle_ids: vec![0],
        };
        assert_eq!(extract_unique_vertices(&one).ids, vec![2, 3, 4]);

        let two = SurfaceTriangleList {
            triangles: vec![[0, 1, 2], [2, 3, 4]],
            source_triangle_ids: vec![0, 1],
        };
        assert_eq!(extract_unique_vertices(&two).ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn compact_examples() {
        let mesh = two_tris();
        let (compacted, lookup) = compact_vertices(
            &mesh,
            &VertexIdList {
                ids: vec![2, 3, 4],
            },
        );
        assert_eq!(compacted.len(), 3);
        assert_eq!(lookup.raw(), &[u32::MAX, u32::MAX, 0, 1, 2]);

        let (compacted, lookup) = compact_vertices(&mesh, &VertexIdList { ids: vec![] });
        assert!(compacted.is_empty());
        assert!(lookup.raw().iter().all(|&e| e == u32::MAX));

        let (compacted, lookup) = compact_vertices(
            &mesh,
            &VertexIdList {
                ids: (0..5).collect(),
            },
        );
        assert_eq!(compacted, mesh.vertices);
        assert_eq!(lookup.raw(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn remap_examples() {
        let list = SurfaceTriangleList {
            triangles: vec![[2, 3, 4]],
            source_triangle_ids: vec![1],
        };
        let mesh = two_tris();
        let (_, lookup) = compact_vertices(
            &mesh,
            &VertexIdList {
                ids: vec![2, 3, 4],
            },
        );
        assert_eq!(remap_triangles(&list, &lookup).unwrap(), vec![[0, 1, 2]]);

        let identity = LookupTable {
            entries: (0..5).collect(),
        };
        let both = SurfaceTriangleList {
            triangles: vec![[0, 1, 2], [2, 3, 4]],
            source_triangle_ids: vec![0, 1],
        };
        assert_eq!(
            remap_triangles(&both, &identity).unwrap(),
            both.triangles
        );

        let missing = LookupTable {
            entries: vec![0, 1, u32::MAX, 2, 3],
        };
        assert!(matches!(
            remap_triangles(&both, &missing),
            Err(SurfaceError::MissingLookupEntry(2))
        ));
    }

    fn fake_point_set(mesh: &TriangleMesh, flags: Vec<bool>) -> PenetrationPointSet {
        let points = flags
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| {
                f.then_some(crate::pip::PenetrationPoint {
                    vertex_id: i as u32,
                    position: mesh.vertices[i],
                    pip_distance: 1.0,
                })
            })
            .collect();
        PenetrationPointSet {
            points,
            source: SourceObject::A,
            inside_flags: flags,
        }
    }

    #[test]
    fn empty_point_set_gives_empty_surface() {
        let mesh = shapes::unit_cube();
        let set = fake_point_set(&mesh, vec![false; mesh.vertex_count()]);
        let surf = build_penetration_surface(&mesh, &set).unwrap();
        assert!(surf.is_empty());
        assert!(surf.bvh.is_none());
        assert!(surf.point_set.is_empty());
    }

    #[test]
    fn nested_object_keeps_every_triangle() {
        let mesh = shapes::icosphere(1);
        let set = fake_point_set(&mesh, vec![true; mesh.vertex_count()]);
        let surf = build_penetration_surface(&mesh, &set).unwrap();
        assert_eq!(surf.triangles.len(), mesh.triangle_count());
        assert_eq!(surf.vertices, mesh.vertices);
        assert!(surf.bvh.is_some());
    }

    /// Straightforward map-based construction used as the reference.
    fn dictionary_surface(
        mesh: &TriangleMesh,
        flags: &[bool],
    ) -> (BTreeSet<u32>, Vec<(u32, [Point3<f64>; 3])>) {
        let mut kept_ids = BTreeSet::new();
        let mut tris = Vec::new();
        let mut referenced = BTreeMap::new();
        for (i, tri) in mesh.triangles.iter().enumerate() {
            if tri.iter().any(|&v| flags[v as usize]) {
                kept_ids.insert(i as u32);
                for &v in tri {
                    referenced.entry(v).or_insert(mesh.vertices[v as usize]);
                }
                let [a, b, c] = *tri;
                tris.push((
                    i as u32,
                    [
                        mesh.vertices[a as usize],
                        mesh.vertices[b as usize],
                        mesh.vertices[c as usize],
                    ],
                ));
            }
        }
        (kept_ids, tris)
    }

    fn assert_matches_dictionary(mesh: &TriangleMesh, flags: &[bool]) {
        let set = fake_point_set(mesh, flags.to_vec());
        let surf = build_penetration_surface(mesh, &set).unwrap();
        let (ref_ids, ref_tris) = dictionary_surface(mesh, flags);

        let got_ids: BTreeSet<u32> = surf.source_triangle_ids.iter().copied().collect();
        assert_eq!(got_ids, ref_ids);

        // geometry is bit-equal triangle by triangle
        assert_eq!(surf.triangles.len(), ref_tris.len());
        for (tri, (_, ref_pts)) in surf.triangles.iter().zip(&ref_tris) {
            for (slot, ref_p) in tri.iter().zip(ref_pts.iter()) {
                let got = surf.vertices[*slot as usize];
                assert_eq!(got.x.to_bits(), ref_p.x.to_bits());
                assert_eq!(got.y.to_bits(), ref_p.y.to_bits());
                assert_eq!(got.z.to_bits(), ref_p.z.to_bits());
            }
        }
        // index closure
        for tri in &surf.triangles {
            for &v in tri {
                assert!((v as usize) < surf.vertices.len());
            }
        }
    }

    #[test]
    fn half_overlapped_cubes_match_dictionary() {
        let cube = shapes::subdivided_cube(3);
        let (a, b) = make_overlap_scene(&cube, 0.5, Axis::X).unwrap();
        let bvh = Bvh::build(&b.vertices, &b.triangles).unwrap();
        let mut stats = TraversalStats::default();
        let set =
            pip::extract_penetration_points(&bvh, &a, SourceObject::A, &pip::default_axis(), &mut stats);
        assert!(!set.is_empty());
        let surf = build_penetration_surface(&a, &set).unwrap();
        assert!(!surf.is_empty());
        assert_matches_dictionary(&a, &set.inside_flags);
        // ray sources sit on the compacted surface
        let vertex_set: BTreeSet<u64> = surf
            .vertices
            .iter()
            .map(|v| v.x.to_bits() ^ v.y.to_bits().rotate_left(21) ^ v.z.to_bits().rotate_left(42))
            .collect();
        for p in &surf.point_set.points {
            let key = p.position.x.to_bits()
                ^ p.position.y.to_bits().rotate_left(21)
                ^ p.position.z.to_bits().rotate_left(42);
            assert!(vertex_set.contains(&key));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_pipeline_matches_dictionary(seed in 0u64..1u64 << 32) {
            use rand::{Rng, SeedableRng};
            let mesh = shapes::icosphere(1);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let flags: Vec<bool> = (0..mesh.vertex_count())
                .map(|_| rng.random_bool(0.3))
                .collect();
            assert_matches_dictionary(&mesh, &flags);
        }
    }
}
