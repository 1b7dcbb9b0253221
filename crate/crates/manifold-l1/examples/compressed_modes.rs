//! Compressed manifold modes on an icosphere: sweep the sparsity weight and
//! watch the modes localize. Writes per-mode PLY files for external viewers.
//!
//! ```bash
//! cargo run --release --example compressed_modes
//! ```

use manifold_l1::cmm::{compressed_modes, CmmOptions};
use manifold_l1::io::export_ply;
use manifold_l1::shapes;

fn main() -> manifold_l1::Result<()> {
    let mesh = shapes::icosphere(1.0, 3);
    println!(
        "icosphere level 3: {} vertices, {} faces",
        mesh.vertex_count(),
        mesh.face_count()
    );

    let out_dir = std::env::temp_dir().join("manifold-l1-modes");
    std::fs::create_dir_all(&out_dir)?;

    for mu in [0.0, 3.0, 30.0] {
        let opts = CmmOptions {
            k: 8,
            mu,
            ..Default::default()
        };
        let set = compressed_modes(&mesh, &opts)?;
        let median_support = {
            let mut s = set.support_fractions.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s[s.len() / 2]
        };
        let median_iters = {
            let mut it: Vec<usize> = set.histories.iter().map(|h| h.outer_iterations()).collect();
            it.sort_unstable();
            it[it.len() / 2]
        };
        println!("mu = {mu}:");
        println!(
            "  eigenvalues    = {:?}",
            set.eigenvalues
                .iter()
                .map(|l| (l * 1e3).round() / 1e3)
                .collect::<Vec<_>>()
        );
        println!("  median support = {median_support:.3}");
        println!("  median iters   = {median_iters}");

        for (i, mode) in set.modes.iter().enumerate() {
            let path = out_dir.join(format!("mu{mu}_mode_{:02}.ply", i + 1));
            export_ply(&mesh, mode, path)?;
        }
    }
    println!("PLY files written under {}", out_dir.display());
    Ok(())
}
