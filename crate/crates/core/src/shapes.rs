//! Procedural closed meshes for tests and benchmark scenes.
//!
//! All generators produce consistently outward-wound, closed triangle sets
//! with deterministic vertex and triangle order.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::mesh::TriangleMesh;

/// Regular tetrahedron inscribed in the unit sphere.
pub fn tetrahedron() -> TriangleMesh {
    let s = 1.0 / 3.0f64.sqrt();
    let vertices = vec![
        Point3::new(s, s, s),
        Point3::new(s, -s, -s),
        Point3::new(-s, s, -s),
        Point3::new(-s, -s, s),
    ];
    let triangles = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriangleMesh::new(vertices, triangles)
}

/// Axis-aligned box with two triangles per face.
pub fn cube(min: Point3<f64>, max: Point3<f64>) -> TriangleMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    // corners indexed by bits zyx
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(false, true, false),
        v(true, true, false),
        v(false, false, true),
        v(true, false, true),
        v(false, true, true),
        v(true, true, true),
    ];
    let triangles = vec![
        // -z
        [0, 2, 3],
        [0, 3, 1],
        // +z
        [4, 5, 7],
        [4, 7, 6],
        // -y
        [0, 1, 5],
        [0, 5, 4],
        // +y
        [2, 6, 7],
        [2, 7, 3],
        // -x
        [0, 4, 6],
        [0, 6, 2],
        // +x
        [1, 3, 7],
        [1, 7, 5],
    ];
    TriangleMesh::new(vertices, triangles)
}

pub fn unit_cube() -> TriangleMesh {
    cube(Point3::origin(), Point3::new(1.0, 1.0, 1.0))
}

/// One 4-to-1 midpoint split of every triangle; shared edge midpoints are
/// deduplicated so closedness and orientation are preserved.
pub fn subdivide_midpoint(mesh: &TriangleMesh) -> TriangleMesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);

    let mut mid = |a: u32, b: u32, vertices: &mut Vec<Point3<f64>>| -> u32 {
        let key = if a < b { (a, b) } else { (b, a) };
        *midpoint.entry(key).or_insert_with(|| {
            let p = nalgebra::center(&vertices[a as usize], &vertices[b as usize]);
            vertices.push(p);
            (vertices.len() - 1) as u32
        })
    };

    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([b, bc, ab]);
        triangles.push([c, ca, bc]);
        triangles.push([ab, bc, ca]);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Regular icosahedron with unit circumradius.
pub fn icosahedron() -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let n = (1.0 + phi * phi).sqrt();
    let a = 1.0 / n;
    let b = phi / n;
    let vertices = vec![
        Point3::new(-a, b, 0.0),
        Point3::new(a, b, 0.0),
        Point3::new(-a, -b, 0.0),
        Point3::new(a, -b, 0.0),
        Point3::new(0.0, -a, b),
        Point3::new(0.0, a, b),
        Point3::new(0.0, -a, -b),
        Point3::new(0.0, a, -b),
        Point3::new(b, 0.0, -a),
        Point3::new(b, 0.0, a),
        Point3::new(-b, 0.0, -a),
        Point3::new(-b, 0.0, a),
    ];
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::new(vertices, triangles)
}

/// Unit-radius sphere approximation: icosahedron subdivided `subdivisions`
/// times with every vertex pushed back onto the sphere.
/// 20 * 4^subdivisions triangles.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let mut mesh = icosahedron();
    for _ in 0..subdivisions {
        mesh = subdivide_midpoint(&mesh);
        for v in mesh.vertices.iter_mut() {
            let r = v.coords.norm();
            v.coords /= r;
        }
    }
    mesh
}

/// Star-shaped "scanned object" stand-in: an icosphere displaced radially by
/// a fixed multi-frequency bump field. Radius stays within
/// `1 ± amplitude`, so the surface cannot self-intersect.
pub fn bumpy_icosphere(subdivisions: u32, amplitude: f64) -> TriangleMesh {
    assert!(amplitude.abs() < 1.0, "amplitude must keep the radius positive");
    let mut mesh = icosphere(subdivisions);
    for v in mesh.vertices.iter_mut() {
        let d: Vector3<f64> = v.coords.normalize();
        let bump = 0.5 * (5.0 * d.x).sin() * (4.0 * d.y + 1.0).sin()
            + 0.3 * (6.0 * d.y + 2.0).sin() * (3.0 * d.z).cos()
            + 0.2 * (7.0 * d.z + 4.0).sin() * (4.0 * d.x + 3.0).cos();
        *v = Point3::from(d * (1.0 + amplitude * bump));
    }
    mesh
}

/// Unit cube with every face split into an `n x n` quad grid; lattice points
/// on shared edges and corners are deduplicated exactly.
pub fn subdivided_cube(n: u32) -> TriangleMesh {
    assert!(n >= 1);
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut lattice: HashMap<(u32, u32, u32), u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    let mut vertex_at = |key: (u32, u32, u32)| -> u32 {
        *lattice.entry(key).or_insert_with(|| {
            let p = Point3::new(
                key.0 as f64 / n as f64,
                key.1 as f64 / n as f64,
                key.2 as f64 / n as f64,
            );
            vertices.push(p);
            (vertices.len() - 1) as u32
        })
    };

    // each face: lattice key = origin + i*u + j*v, with u x v pointing outward
    type K = (u32, u32, u32);
    let faces: [(K, K, K); 6] = [
        ((0, 0, 0), (0, 1, 0), (1, 0, 0)), // -z
        ((0, 0, n), (1, 0, 0), (0, 1, 0)), // +z
        ((0, 0, 0), (1, 0, 0), (0, 0, 1)), // -y
        ((0, n, 0), (0, 0, 1), (1, 0, 0)), // +y
        ((0, 0, 0), (0, 0, 1), (0, 1, 0)), // -x
        ((n, 0, 0), (0, 1, 0), (0, 0, 1)), // +x
    ];

    for (origin, u, v) in faces {
        let at = |i: u32, j: u32| -> (u32, u32, u32) {
            (
                origin.0 + i * u.0 + j * v.0,
                origin.1 + i * u.1 + j * v.1,
                origin.2 + i * u.2 + j * v.2,
            )
        };
        for i in 0..n {
            for j in 0..n {
                let p00 = vertex_at(at(i, j));
                let p10 = vertex_at(at(i + 1, j));
                let p01 = vertex_at(at(i, j + 1));
                let p11 = vertex_at(at(i + 1, j + 1));
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Open planar quad `[0,1]^2` in the z=0 plane as an `n x n` triangle grid.
/// Not closed; used for watertightness checks on shared edges.
pub fn quad_grid(n: u32) -> TriangleMesh {
    assert!(n >= 1);
    let mut vertices = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
        }
    }
    let idx = |i: u32, j: u32| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity((2 * n * n) as usize);
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}
