//! Stability of compressed modes under resampling: compute modes on a bumpy
//! torus and on its midpoint subdivision, transfer the coarse modes to the
//! fine mesh, and report cluster-matched A-correlations.
//!
//! ```bash
//! cargo run --release --example mode_stability
//! ```

use manifold_l1::cmm::{cluster_matched_correlations, compressed_modes, CmmOptions};
use manifold_l1::mesh::AreaScheme;
use manifold_l1::operators::lumped_mass;
use manifold_l1::shapes;

fn main() -> manifold_l1::Result<()> {
    let coarse = shapes::bumpy_torus(32, 32, 1.0, 0.4, 0.25);
    let (fine, map) = coarse.midpoint_subdivide(1)?;
    println!(
        "coarse: {} vertices, fine: {} vertices",
        coarse.vertex_count(),
        fine.vertex_count()
    );

    let opts = CmmOptions {
        k: 6,
        mu: 2.0,
        ..Default::default()
    };
    let coarse_set = compressed_modes(&coarse, &opts)?;
    let fine_set = compressed_modes(&fine, &opts)?;

    let a_fine = lumped_mass(&fine, AreaScheme::Barycentric);
    let transferred: Vec<Vec<f64>> = coarse_set
        .modes
        .iter()
        .map(|m| map.prolong(m))
        .collect::<manifold_l1::Result<_>>()?;

    let correlations = cluster_matched_correlations(
        &fine_set.modes,
        &fine_set.eigenvalues,
        &transferred,
        &coarse_set.eigenvalues,
        &a_fine,
        0.05,
    );
    println!("per-mode |A-correlation| between resolutions:");
    for (i, c) in correlations.iter().enumerate() {
        println!(
            "  mode {:>2}: {:.4}  (lambda fine {:.4}, coarse {:.4})",
            i + 1,
            c,
            fine_set.eigenvalues[i],
            coarse_set.eigenvalues[i]
        );
    }
    Ok(())
}
