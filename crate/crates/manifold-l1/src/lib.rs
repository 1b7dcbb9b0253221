// Indexed loops over parallel arrays read better in the numerical kernels,
// and `!(x > 0.0)` is the deliberate NaN-rejecting comparison.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

//! Consistent L1 norms and compressed manifold modes on triangle meshes.
//!
//! The vector 1-norm of vertex samples is a poor stand-in for the surface
//! integral of |f|: it ignores the mesh entirely and changes with the
//! sampling. This crate provides geometry-aware replacements and the solver
//! machinery built on top of them:
//!
//! * [`mesh`] — triangle meshes (OFF/OBJ ingestion, cell areas, midpoint
//!   subdivision with exact linear transfer).
//! * [`operators`] — cotangent stiffness and lumped mass assembly.
//! * [`l1`] — zeroth- and first-order discretizations of the L1 norm; the
//!   first-order route integrates |f| exactly over the piecewise-linear
//!   interpolant by splitting triangles along its zero line.
//! * [`irls`] — minimization of quadratic-plus-L1 objectives by iterative
//!   reweighting, with diagonal-dominance or PSD-projection repair of the
//!   reweighted systems.
//! * [`spectral`] — smallest generalized eigenpairs of sparse-plus-low-rank
//!   pencils via Woodbury-accelerated Lanczos iteration, plus dense oracles.
//! * [`cmm`] — compressed manifold modes as a sequence of deflated
//!   eigenproblems.
//! * [`study`] — the norm-consistency convergence study across subdivision
//!   levels.
//! * [`cli`] — the command-line front end (`norm`, `modes`, `convergence`,
//!   `bench`, `export-ply`).
//!
//! Each major capability has a runnable example under `examples/`; start
//! with `norms` and `compressed_modes`.
//!
//! Everything is deterministic: fixed inputs and seeds produce bitwise
//! identical outputs.

pub mod cli;
pub mod cmm;
pub mod error;
pub mod io;
pub mod irls;
pub mod l1;
pub mod mesh;
pub mod operators;
pub mod rng;
pub mod shapes;
pub mod sparse;
pub mod spectral;
pub mod study;

pub use error::{Error, Result};
