//! Two IRLS demos: the scalar problem min (f-1)^2 + mu |f|, whose minimizer
//! is the soft-threshold value 1 - mu/2, and L1-regularized denoising of a
//! spiky function on a sphere.
//!
//! ```bash
//! cargo run --release --example irls_soft_threshold
//! ```

use manifold_l1::irls::{irls_minimize, IrlsOptions, L1Term, QuadraticObjective};
use manifold_l1::l1::L1Scheme;
use manifold_l1::mesh::{AreaScheme, CellAreaVector};
use manifold_l1::operators::{cotangent_stiffness, lumped_mass};
use manifold_l1::rng::SplitMix64;
use manifold_l1::shapes;
use manifold_l1::sparse::SparseSymmetric;

fn main() -> manifold_l1::Result<()> {
    // 1-D soft thresholding
    let areas = CellAreaVector::from_areas(vec![1.0], AreaScheme::Barycentric)?;
    let q = SparseSymmetric::from_triplets(1, &[(0, 0, 1.0)]);
    let objective = QuadraticObjective::new(q, vec![-1.0], 1.0)?;
    println!("min (f-1)^2 + mu |f|:");
    for mu in [0.1, 0.5, 1.0, 1.9, 2.5] {
        let opts = IrlsOptions {
            mu,
            max_outer_iters: 2000,
            objective_rel_tol: 1e-15,
            ..Default::default()
        };
        let (f, history) = irls_minimize(&L1Term::Zeroth(&areas), &objective, &opts)?;
        let expected = (1.0 - mu / 2.0).max(0.0);
        println!(
            "  mu = {mu:<4} f* = {:+.8} (soft threshold {:+.8}, {} iterations)",
            f[0],
            expected,
            history.records.len() - 1
        );
    }

    // denoising on a sphere: E(f) = ||f - g||_A^2 + f^T W f, plus mu ||f||_L1
    let mesh = shapes::icosphere(1.0, 2);
    let n = mesh.vertex_count();
    let w = cotangent_stiffness(&mesh);
    let a = lumped_mass(&mesh, AreaScheme::Barycentric);
    let cell_areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);

    let mut rng = SplitMix64::new(42);
    let noisy: Vec<f64> = (0..n)
        .map(|i| {
            if i % 37 == 0 {
                3.0
            } else {
                0.15 * rng.next_normal()
            }
        })
        .collect();

    // f^T (W + A) f - 2 (A g)^T f + g^T A g
    let quadratic = w.with_added_diagonal(a.entries(), 1.0)?;
    let linear: Vec<f64> = a.apply(&noisy).iter().map(|v| -v).collect();
    let constant = a.inner(&noisy, &noisy);
    let objective = QuadraticObjective::new(quadratic, linear, constant)?;

    println!("\nL1 denoising on an icosphere ({n} vertices):");
    for mu in [0.0, 0.05, 0.2] {
        let opts = IrlsOptions {
            mu,
            scheme: L1Scheme::First,
            max_outer_iters: 100,
            ..Default::default()
        };
        let term = L1Term::on_mesh(&mesh, &cell_areas, opts.scheme);
        let (f, history) = irls_minimize(&term, &objective, &opts)?;
        let near_zero = f.iter().filter(|v| v.abs() < 1e-4).count();
        println!(
            "  mu = {mu:<5} -> {near_zero:>4}/{n} entries below 1e-4, objective {:.6}, {} iterations",
            history.final_objective().unwrap(),
            history.records.len() - 1
        );
    }
    Ok(())
}
