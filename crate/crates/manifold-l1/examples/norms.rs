//! Compare the three discrete L1 norms against the quadrature reference.
//!
//! ```bash
//! cargo run --release --example norms
//! ```

use manifold_l1::l1::{norm_first, norm_naive, norm_zeroth, quadrature_norm};
use manifold_l1::mesh::AreaScheme;
use manifold_l1::rng::SplitMix64;
use manifold_l1::shapes;

fn main() -> manifold_l1::Result<()> {
    let mesh = shapes::torus(32, 32, 1.0, 0.4);
    let areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);
    println!(
        "torus: {} vertices, {} faces, area {:.6}",
        mesh.vertex_count(),
        mesh.face_count(),
        mesh.total_area()
    );

    let mut rng = SplitMix64::new(7);
    let f: Vec<f64> = (0..mesh.vertex_count())
        .map(|_| rng.next_normal())
        .collect();

    let naive = norm_naive(&f);
    let zeroth = norm_zeroth(&f, &areas)?;
    let first = norm_first(&mesh, &f)?;
    let oracle = quadrature_norm(&mesh, &f, 3000)?;

    println!("random vertex function:");
    println!("  naive  (sum |f_i|)        = {naive:.10}");
    println!("  zeroth (area weighted)    = {zeroth:.10}");
    println!("  first  (exact interpolant)= {first:.10}");
    println!("  oracle (3000 pts/tri)     = {oracle:.10}");
    println!(
        "  first vs oracle rel diff  = {:.3e}",
        (first - oracle).abs() / first
    );
    println!(
        "  naive vs oracle rel diff  = {:.3e}",
        (naive - oracle).abs() / oracle
    );

    // uniform-sign functions collapse the zeroth and first schemes exactly
    let g: Vec<f64> = f.iter().map(|v| v.abs() + 0.1).collect();
    let zeroth_g = norm_zeroth(&g, &areas)?;
    let first_g = norm_first(&mesh, &g)?;
    println!("uniform-sign function:");
    println!(
        "  zeroth = {zeroth_g:.12}, first = {first_g:.12}, rel diff = {:.3e}",
        (zeroth_g - first_g).abs() / first_g
    );
    Ok(())
}
