//! Mesh ingestion, validation, rigid placement, and benchmark scene setup.
//!
//! Meshes are indexed triangle sets over `f64` positions. Loading checks the
//! structural invariants (index range, no repeated index within a face,
//! finite coordinates); closedness is a separate query because open meshes
//! are still valid inputs for plain ray queries.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: face references vertex {index}, but the file defines {count} vertices")]
    IndexOutOfRange {
        path: String,
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("{path}:{line}: face repeats vertex index {index}")]
    RepeatedIndex {
        path: String,
        line: usize,
        index: u32,
    },
    #[error("{path}:{line}: non-finite vertex coordinate")]
    NonFinite { path: String, line: usize },
    #[error("{path}: unrecognized mesh format (expected .obj or .ply)")]
    UnknownFormat { path: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("overlap ratio {0} is outside (0, 1]")]
    InvalidOverlapRatio(f64),
    #[error("mesh has zero extent along axis {0}, cannot place an overlap scene")]
    ZeroExtent(Axis),
}

/// Coordinate axis used for scene placement and the PIP ray direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        match self {
            Axis::X => Vector3::x(),
            Axis::Y => Vector3::y(),
            Axis::Z => Vector3::z(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("invalid axis {other:?} (expected x, y, or z)")),
        }
    }
}

/// Axis-aligned bounding box, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    /// Empty box: grows to the right bounds under `grow`/`union`.
    pub fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        let mut bb = Aabb::empty();
        for p in points {
            bb.grow(p);
        }
        bb
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: Point3::new(
                self.min.x.min(other.min.x),
                self.min.y.min(other.min.y),
                self.min.z.min(other.min.z),
            ),
            max: Point3::new(
                self.max.x.max(other.max.x),
                self.max.y.max(other.max.y),
                self.max.z.max(other.max.z),
            ),
        }
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        self.max[axis.index()] - self.min[axis.index()]
    }

    pub fn diagonal(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3<f64>, slack: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - slack && p[i] <= self.max[i] + slack)
    }
}

/// Indexed triangle set. Vertex and triangle order are preserved from the
/// source file so that indices stay meaningful across the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Self {
        TriangleMesh {
            vertices,
            triangles,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// The three corner positions of triangle `t`.
    pub fn triangle_points(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn translated(&self, offset: Vector3<f64>) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Benchmark scene description: two mesh paths plus a placement rule.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub path_a: String,
    /// May equal `path_a`; the scene then overlaps two copies of one object.
    pub path_b: String,
    /// Fraction of the AABB extent of A shared with B along `axis`, in (0, 1].
    pub overlap_ratio: f64,
    pub axis: Axis,
}

/// True iff every undirected edge is shared by exactly two triangles.
pub fn check_closed(mesh: &TriangleMesh) -> bool {
    let mut edges: HashMap<(u32, u32), u32> = HashMap::with_capacity(mesh.triangles.len() * 3 / 2);
    for tri in &mesh.triangles {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = if a < b { (a, b) } else { (b, a) };
            *edges.entry(key).or_insert(0) += 1;
        }
    }
    edges.values().all(|&count| count == 2)
}

/// Places two copies of `mesh` so that their AABBs share `ratio` of the
/// extent along `axis`: B is A translated by `(1 - ratio) * extent`.
pub fn make_overlap_scene(
    mesh: &TriangleMesh,
    ratio: f64,
    axis: Axis,
) -> Result<(TriangleMesh, TriangleMesh), MeshError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(MeshError::InvalidOverlapRatio(ratio));
    }
    let extent = mesh.aabb().extent(axis);
    if extent <= 0.0 {
        return Err(MeshError::ZeroExtent(axis));
    }
    let offset = axis.unit() * ((1.0 - ratio) * extent);
    Ok((mesh.clone(), mesh.translated(offset)))
}

/// Loads a mesh, picking the format from the file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("obj") => load_obj(path),
        Some("ply") => load_ply(path),
        _ => Err(MeshError::UnknownFormat {
            path: path.display().to_string(),
        }),
    }
}

fn read_to_string(path: &Path) -> Result<String, MeshError> {
    fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn check_face(
    path: &Path,
    line: usize,
    raw: [i64; 3],
    vertex_count: usize,
) -> Result<[u32; 3], MeshError> {
    let mut out = [0u32; 3];
    for (slot, &idx) in out.iter_mut().zip(raw.iter()) {
        if idx < 1 || idx as usize > vertex_count {
            return Err(MeshError::IndexOutOfRange {
                path: path.display().to_string(),
                line,
                index: idx,
                count: vertex_count,
            });
        }
        *slot = (idx - 1) as u32;
    }
    if out[0] == out[1] || out[1] == out[2] || out[0] == out[2] {
        let repeated = if out[0] == out[1] || out[0] == out[2] {
            out[0]
        } else {
            out[1]
        };
        return Err(MeshError::RepeatedIndex {
            path: path.display().to_string(),
            line,
            // report the 1-based index as written in the file
            index: repeated + 1,
        });
    }
    Ok(out)
}

fn check_vertex(
    path: &Path,
    line: usize,
    p: Point3<f64>,
) -> Result<Point3<f64>, MeshError> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(p)
    } else {
        Err(MeshError::NonFinite {
            path: path.display().to_string(),
            line,
        })
    }
}

/// Wavefront OBJ: `v` and `f` records only, 1-based indices, triangles only.
/// `f` entries of the form `i/j/k` keep their leading vertex index; faces
/// with more than three vertices are rejected.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let mut fields = raw_line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = fields
                        .next()
                        .ok_or_else(|| parse_err(path, line, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(path, line, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(check_vertex(
                    path,
                    line,
                    Point3::new(coords[0], coords[1], coords[2]),
                )?);
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(3);
                for tok in fields {
                    let first = tok.split('/').next().unwrap_or("");
                    let parsed: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, line, format!("bad face index {tok:?}")))?;
                    idx.push(parsed);
                }
                if idx.len() != 3 {
                    return Err(parse_err(
                        path,
                        line,
                        format!("face has {} vertices, only triangles are supported", idx.len()),
                    ));
                }
                triangles.push(check_face(
                    path,
                    line,
                    [idx[0], idx[1], idx[2]],
                    vertices.len(),
                )?);
            }
            // normals, texcoords, groups, materials, comments: ignored
            _ => {}
        }
    }
    Ok(TriangleMesh::new(vertices, triangles))
}

/// ASCII PLY with `element vertex` carrying x/y/z properties and
/// `element face` carrying a 3-entry index list.
pub fn load_ply(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));

    let (line, magic) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(parse_err(path, line, "missing ply magic"));
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Element {
        Vertex,
        Face,
        Other,
    }

    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    // property slots of the current element, and where x/y/z live
    let mut current = Element::Other;
    let mut vertex_props = 0usize;
    let mut xyz_slots: [Option<usize>; 3] = [None; 3];
    let mut header_end = 0usize;

    for (line, raw) in lines.by_ref() {
        let mut fields = raw.split_whitespace();
        match fields.next() {
            Some("format") => {
                if fields.next() != Some("ascii") {
                    return Err(parse_err(path, line, "only ascii PLY is supported"));
                }
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = fields.next().unwrap_or("");
                let count: usize = fields
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(path, line, "element needs a count"))?;
                current = match name {
                    "vertex" => {
                        vertex_count = count;
                        Element::Vertex
                    }
                    "face" => {
                        face_count = count;
                        Element::Face
                    }
                    _ => Element::Other,
                };
            }
            Some("property") => {
                if current == Element::Vertex {
                    let name = fields.last().unwrap_or("");
                    match name {
                        "x" => xyz_slots[0] = Some(vertex_props),
                        "y" => xyz_slots[1] = Some(vertex_props),
                        "z" => xyz_slots[2] = Some(vertex_props),
                        _ => {}
                    }
                    vertex_props += 1;
                }
            }
            Some("end_header") => {
                header_end = line;
                break;
            }
            Some(other) => {
                return Err(parse_err(path, line, format!("unexpected header record {other:?}")));
            }
            None => {}
        }
    }
    if header_end == 0 {
        return Err(parse_err(path, 1, "header never ends"));
    }
    let [Some(sx), Some(sy), Some(sz)] = xyz_slots else {
        return Err(parse_err(path, header_end, "vertex element lacks x/y/z properties"));
    };

    let mut vertices = Vec::with_capacity(vertex_count);
    let mut triangles = Vec::with_capacity(face_count);
    let mut data = lines.filter(|(_, l)| !l.trim().is_empty());

    for _ in 0..vertex_count {
        let (line, raw) = data
            .next()
            .ok_or_else(|| parse_err(path, header_end, "file ends before all vertices are read"))?;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() < vertex_props {
            return Err(parse_err(path, line, "short vertex record"));
        }
        let get = |slot: usize| -> Result<f64, MeshError> {
            fields[slot]
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad coordinate {:?}", fields[slot])))
        };
        vertices.push(check_vertex(
            path,
            line,
            Point3::new(get(sx)?, get(sy)?, get(sz)?),
        )?);
    }

    for _ in 0..face_count {
        let (line, raw) = data
            .next()
            .ok_or_else(|| parse_err(path, header_end, "file ends before all faces are read"))?;
        let mut fields = raw.split_whitespace();
        let n: usize = fields
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, line, "face record needs a leading count"))?;
        if n != 3 {
            return Err(parse_err(
                path,
                line,
                format!("face has {n} vertices, only triangles are supported"),
            ));
        }
        let mut idx = [0i64; 3];
        for v in idx.iter_mut() {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(path, line, "short face record"))?;
            // PLY indices are 0-based; shift to share the 1-based range check
            let parsed: i64 = tok
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad face index {tok:?}")))?;
            *v = parsed + 1;
        }
        triangles.push(check_face(path, line, idx, vertices.len())?);
    }

    Ok(TriangleMesh::new(vertices, triangles))
}

/// Writes the OBJ dialect accepted by [`load_obj`]. Coordinates use the
/// shortest decimal form that parses back to the identical `f64`.
pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    let mut out = String::with_capacity(mesh.vertices.len() * 32);
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    let mut file = fs::File::create(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(out.as_bytes()).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}
