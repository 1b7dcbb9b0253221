//! Harmonic (mu = 0) spectrum of the unit sphere: the cotangent pencil
//! eigenvalues approach l(l+1) with multiplicity 2l+1 under refinement.
//!
//! ```bash
//! cargo run --release --example harmonic_spectrum
//! ```

use manifold_l1::mesh::AreaScheme;
use manifold_l1::operators::{cotangent_stiffness, lumped_mass};
use manifold_l1::shapes;
use manifold_l1::spectral::{harmonic_basis, EigOptions};

fn main() -> manifold_l1::Result<()> {
    for level in [2usize, 3] {
        let mesh = shapes::icosphere(1.0, level);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let pairs = harmonic_basis(&w, &a, 16, 2000, &EigOptions::default())?;
        let lambdas: Vec<f64> = pairs.iter().map(|(l, _)| *l).collect();
        println!(
            "icosphere level {level} ({} vertices), area = {:.6} (sphere: {:.6})",
            mesh.vertex_count(),
            mesh.total_area(),
            4.0 * std::f64::consts::PI
        );
        println!("  first 16 eigenvalues (analytic: 0, 2 x3, 6 x5, 12 x7):");
        print!("  ");
        for l in &lambdas {
            print!("{l:.4} ");
        }
        println!();
    }
    Ok(())
}
