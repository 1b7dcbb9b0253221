//! Export a mesh with a per-vertex scalar as binary PLY (property "quality"),
//! viewable in MeshLab or similar.
//!
//! ```bash
//! cargo run --release --example export_ply
//! ```

use manifold_l1::io::export_ply;
use manifold_l1::shapes;

fn main() -> manifold_l1::Result<()> {
    let mesh = shapes::bumpy_torus(48, 48, 1.0, 0.4, 0.25);
    // height above the xy-plane as the scalar
    let height: Vec<f64> = mesh.vertices().iter().map(|v| v[2]).collect();

    let path = std::env::temp_dir().join("manifold-l1-height.ply");
    export_ply(&mesh, &height, &path)?;
    println!(
        "wrote {} ({} vertices, {} faces)",
        path.display(),
        mesh.vertex_count(),
        mesh.face_count()
    );
    Ok(())
}
