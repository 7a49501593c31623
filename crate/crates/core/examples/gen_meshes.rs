//! Writes the procedural benchmark meshes as OBJ files.
//!
//! Usage: cargo run --release -p rtpd-core --example gen_meshes [DIR]

use rtpd_core::{mesh, shapes};

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| ".".to_string());
    let dir = std::path::Path::new(&dir);
    std::fs::create_dir_all(dir).expect("create output directory");

    let meshes = [
        ("icosphere3.obj", shapes::icosphere(3)),
        ("icosphere6.obj", shapes::icosphere(6)),
        ("bumpy6.obj", shapes::bumpy_icosphere(6, 0.25)),
        ("gridcube.obj", shapes::subdivided_cube(16)),
    ];
    for (name, m) in meshes {
        let path = dir.join(name);
        mesh::save_obj(&m, &path).expect("write mesh");
        println!(
            "{}: {} vertices, {} triangles",
            path.display(),
            m.vertex_count(),
            m.triangle_count()
        );
    }
}
