//! Mean relative error of the three norm discretizations across subdivision
//! levels. The naive vector norm sits orders of magnitude above the
//! area-weighted schemes, which converge under refinement.
//!
//! ```bash
//! cargo run --release --example convergence_study
//! ```

use manifold_l1::shapes;
use manifold_l1::study::convergence_study;

fn main() -> manifold_l1::Result<()> {
    let mesh = shapes::icosahedron(0.1);
    let report = convergence_study(&mesh, 4, 50, 2000)?;

    println!("{}", report.functions);
    println!(
        "{:>5} {:>8} {:>8} {:>12} {:>12} {:>12} {:>12}",
        "level", "verts", "faces", "edge len", "naive", "zeroth", "first"
    );
    for row in &report.levels {
        println!(
            "{:>5} {:>8} {:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            row.level,
            row.vertices,
            row.faces,
            row.avg_edge_length,
            row.mean_abs_rel_err_naive,
            row.mean_abs_rel_err_zeroth,
            row.mean_abs_rel_err_first
        );
    }
    Ok(())
}
