//! Compressed manifold modes.
//!
//! Modes are computed one at a time. Each mode runs a small IRLS loop: the
//! current mode shapes a diagonal potential V (the reweighted L1 term), the
//! operator W + mu A V plus a low-rank deflation term is handed to the
//! eigensolver, and the smallest eigenvector becomes the next iterate. The
//! deflation term beta * A Phi Phi^T A keeps every new mode A-orthogonal to
//! the ones already computed, so the whole computation is a sequence of
//! eigendecompositions.

use crate::error::{Error, Result};
use crate::irls::{gersgorin_repair, psd_project, RepairKind};
use crate::l1::{first_order_weights, norm_first, norm_zeroth, L1Scheme};
use crate::mesh::{AreaScheme, CellAreaVector, TriangleMesh};
use crate::operators::{cotangent_stiffness, lumped_mass};
use crate::sparse::{DiagonalMatrix, SparseSymmetric, SymmetricAssembler};
use crate::spectral::{
    default_deflation_beta, deflation_factor, smallest_generalized_eigpair, EigOptions, StartVector,
};

/// Relative magnitude threshold used for the reported support fractions.
pub const DEFAULT_SUPPORT_TAU: f64 = 1e-3;

#[derive(Clone, Debug, serde::Serialize)]
pub struct CmmOptions {
    /// Number of modes.
    pub k: usize,
    /// Sparsity weight, in the same area units as the discrete objective
    /// phi^T W phi + mu ||phi||.
    pub mu: f64,
    pub scheme: L1Scheme,
    pub repair: RepairKind,
    /// Deflation weight; defaults to ten times the Gersgorin pencil bound.
    pub beta_override: Option<f64>,
    pub max_irls_iters: usize,
    pub irls_rel_tol: f64,
    pub epsilon_rel: f64,
    /// Seeded random eigensolver starts instead of the deterministic ones.
    pub seed: Option<u64>,
}

impl Default for CmmOptions {
    fn default() -> Self {
        Self {
            k: 8,
            mu: 0.0,
            scheme: L1Scheme::Zeroth,
            repair: RepairKind::Gersgorin,
            beta_override: None,
            max_irls_iters: 30,
            irls_rel_tol: 1e-6,
            epsilon_rel: 1e-8,
            seed: None,
        }
    }
}

/// Per-mode IRLS trace.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct ModeHistory {
    /// Discrete objective phi^T W phi + mu ||phi|| per outer iteration.
    pub objectives: Vec<f64>,
    /// Eigensolver operator applications per outer iteration.
    pub eigen_iterations: Vec<usize>,
    /// Rows (Gersgorin) or eigenpairs (PSD projection) repaired per iteration.
    pub repaired: Vec<usize>,
}

impl ModeHistory {
    pub fn outer_iterations(&self) -> usize {
        self.objectives.len()
    }
}

/// A computed set of modes, sorted by ascending eigenvalue.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ModeSet {
    /// Mode vectors, each of length n, A-orthonormal.
    pub modes: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub histories: Vec<ModeHistory>,
    pub support_fractions: Vec<f64>,
    pub support_tau: f64,
    pub options: CmmOptions,
}

/// Diagonal confining potential derived from a mode.
#[derive(Clone, Debug)]
pub struct Potential {
    pub values: Vec<f64>,
}

/// Potential update v(phi).
///
/// Zeroth scheme: v_i = 1 / (2 max(|phi_i|, eps)), always nonnegative.
/// First scheme:  v_i = w_i(phi) / (2 a_i sign(phi_i) max(|phi_i|, eps)),
/// chosen so that mu (A V)_ii phi_i matches the IRLS reweighting gradient;
/// entries can be negative when w_i and phi_i disagree in sign.
pub fn potential_from_mode(
    mesh: &TriangleMesh,
    areas: &CellAreaVector,
    phi: &[f64],
    scheme: L1Scheme,
    epsilon_rel: f64,
) -> Result<Potential> {
    if phi.len() != areas.len() {
        return Err(Error::DimensionMismatch {
            expected: areas.len(),
            got: phi.len(),
        });
    }
    let max_abs = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Ok(Potential {
            values: vec![0.0; phi.len()],
        });
    }
    let eps = epsilon_rel * max_abs;
    let values = match scheme {
        L1Scheme::Zeroth => phi
            .iter()
            .map(|&p| 1.0 / (2.0 * p.abs().max(eps)))
            .collect(),
        L1Scheme::First => {
            let w = first_order_weights(mesh, phi)?;
            w.weights()
                .iter()
                .zip(phi)
                .zip(areas.areas())
                .map(|((&wi, &pi), &ai)| {
                    let sign = if pi < 0.0 { -1.0 } else { 1.0 };
                    wi / (2.0 * ai * sign * pi.abs().max(eps))
                })
                .collect()
        }
    };
    Ok(Potential { values })
}

/// Area fraction where |phi| exceeds tau times its maximum.
pub fn support_fraction(phi: &[f64], areas: &CellAreaVector, tau: f64) -> f64 {
    let max_abs = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return 0.0;
    }
    let threshold = tau * max_abs;
    let mut covered = 0.0;
    for (&p, &a) in phi.iter().zip(areas.areas()) {
        if p.abs() > threshold {
            covered += a;
        }
    }
    covered / areas.total()
}

fn dense_to_sparse(m: &nalgebra::DMatrix<f64>) -> SparseSymmetric {
    let n = m.nrows();
    let mut asm = SymmetricAssembler::new(n);
    for i in 0..n {
        for j in 0..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            if v != 0.0 || i == j {
                asm.add(i, j, v);
            }
        }
    }
    asm.build()
}

/// Compute k compressed manifold modes of a mesh.
pub fn compressed_modes(mesh: &TriangleMesh, opts: &CmmOptions) -> Result<ModeSet> {
    let n = mesh.vertex_count();
    if opts.k < 1 {
        return Err(Error::InvalidOptions("k must be >= 1".into()));
    }
    if opts.k > n {
        return Err(Error::InvalidOptions(format!(
            "requested {} modes from a mesh with {n} vertices",
            opts.k
        )));
    }
    if !(opts.mu >= 0.0) {
        return Err(Error::InvalidOptions(format!(
            "mu must be >= 0, got {}",
            opts.mu
        )));
    }
    if !(opts.epsilon_rel > 0.0) {
        return Err(Error::InvalidOptions("epsilon_rel must be positive".into()));
    }

    let w = cotangent_stiffness(mesh);
    let areas = mesh.vertex_cell_areas(AreaScheme::Barycentric);
    let a = lumped_mass(mesh, AreaScheme::Barycentric);

    let norm_of = |phi: &[f64]| -> Result<f64> {
        match opts.scheme {
            L1Scheme::Zeroth => norm_zeroth(phi, &areas),
            L1Scheme::First => norm_first(mesh, phi),
        }
    };

    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(opts.k);
    let mut eigenvalues: Vec<f64> = Vec::with_capacity(opts.k);
    let mut histories: Vec<ModeHistory> = Vec::with_capacity(opts.k);

    for mode_idx in 0..opts.k {
        let mut potential = vec![0.0; n];
        let mut history = ModeHistory::default();
        let mut prev_iterate: Option<(Vec<f64>, f64)> = None;
        let mut phi: Vec<f64> = Vec::new();
        let mut lambda = 0.0;

        for _iter in 0..opts.max_irls_iters {
            let av: Vec<f64> = a
                .entries()
                .iter()
                .zip(&potential)
                .map(|(&ai, &vi)| ai * vi)
                .collect();
            let q_raw = w.with_added_diagonal(&av, opts.mu)?;

            // Only the first-order scheme can make the potential term
            // indefinite; the zeroth-order potential is nonnegative and the
            // operator needs no modification.
            let needs_repair = opts.scheme == L1Scheme::First
                && opts.repair != RepairKind::None
                && potential.iter().any(|&v| v < 0.0);
            let (q_solve, repaired) = if needs_repair {
                match opts.repair {
                    RepairKind::Gersgorin => gersgorin_repair(&q_raw),
                    RepairKind::PsdProject => {
                        let projected = psd_project(&q_raw, 2000)?;
                        (dense_to_sparse(&projected), 1)
                    }
                    RepairKind::None => unreachable!(),
                }
            } else {
                (q_raw, 0)
            };

            let beta = opts
                .beta_override
                .unwrap_or_else(|| default_deflation_beta(&q_solve, &a));
            let deflation = deflation_factor(&a, &modes, beta);
            let eig_opts = EigOptions {
                start: match opts.seed {
                    None => StartVector::Ones,
                    Some(s) => StartVector::Seeded(
                        s.wrapping_add((mode_idx as u64).wrapping_mul(0x9E37_79B9)),
                    ),
                },
                ..EigOptions::default()
            };
            let res = smallest_generalized_eigpair(&q_solve, &deflation, &a, &eig_opts)?;
            phi = res.eigenvector;

            let mut objective = w.quadratic_form(&phi) + opts.mu * norm_of(&phi)?;
            if !objective.is_finite() {
                return Err(Error::NonFiniteObjective);
            }

            // Safeguard for the repaired first-order operator, which is not
            // an exact majorizer: if the eigenvector step raised the
            // objective, pull back toward the previous iterate along the
            // A-normalized chord.
            if let Some((phi_prev, obj_prev)) = &prev_iterate {
                if objective > *obj_prev {
                    if a.inner(&phi, phi_prev) < 0.0 {
                        for v in phi.iter_mut() {
                            *v = -*v;
                        }
                    }
                    let mut t = 0.5;
                    let mut accepted = false;
                    for _ in 0..20 {
                        let mut cand: Vec<f64> = phi_prev
                            .iter()
                            .zip(&phi)
                            .map(|(&p, &q)| (1.0 - t) * p + t * q)
                            .collect();
                        let nrm = a.norm(&cand);
                        if nrm > 0.0 {
                            for v in cand.iter_mut() {
                                *v /= nrm;
                            }
                            let cand_obj = w.quadratic_form(&cand) + opts.mu * norm_of(&cand)?;
                            if cand_obj <= *obj_prev {
                                phi = cand;
                                objective = cand_obj;
                                accepted = true;
                                break;
                            }
                        }
                        t *= 0.5;
                    }
                    if !accepted {
                        phi = phi_prev.clone();
                        objective = *obj_prev;
                    }
                }
            }

            lambda = q_solve.quadratic_form(&phi) / a.inner(&phi, &phi);
            history.objectives.push(objective);
            history.eigen_iterations.push(res.iterations);
            history.repaired.push(repaired);

            potential =
                potential_from_mode(mesh, &areas, &phi, opts.scheme, opts.epsilon_rel)?.values;

            if let Some((_, prev)) = &prev_iterate {
                if (objective - prev).abs() <= opts.irls_rel_tol * prev.abs().max(1e-300) {
                    break;
                }
            }
            prev_iterate = Some((phi.clone(), objective));
        }

        crate::spectral::sign_fix(&mut phi);
        modes.push(phi);
        eigenvalues.push(lambda);
        histories.push(history);
    }

    // exit invariant: pairwise A-orthogonality
    let mut max_off = 0.0f64;
    for i in 0..opts.k {
        for j in 0..i {
            max_off = max_off.max(a.inner(&modes[i], &modes[j]).abs());
        }
    }
    if max_off > 1e-4 {
        return Err(Error::OrthogonalityLoss {
            max_offdiag: max_off,
        });
    }

    // sort by eigenvalue, stable in the computation order
    let mut order: Vec<usize> = (0..opts.k).collect();
    order.sort_by(|&i, &j| {
        eigenvalues[i]
            .partial_cmp(&eigenvalues[j])
            .unwrap()
            .then(i.cmp(&j))
    });
    let modes: Vec<Vec<f64>> = order.iter().map(|&i| modes[i].clone()).collect();
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let histories: Vec<ModeHistory> = order.iter().map(|&i| histories[i].clone()).collect();
    let support_fractions: Vec<f64> = modes
        .iter()
        .map(|phi| support_fraction(phi, &areas, DEFAULT_SUPPORT_TAU))
        .collect();

    Ok(ModeSet {
        modes,
        eigenvalues,
        histories,
        support_fractions,
        support_tau: DEFAULT_SUPPORT_TAU,
        options: opts.clone(),
    })
}

/// Best absolute A-correlation for each reference mode against a candidate
/// set, matched greedily inside eigenvalue clusters (relative gap below
/// `cluster_rel_gap`). Both mode sets must live on the same mesh.
pub fn cluster_matched_correlations(
    reference_modes: &[Vec<f64>],
    reference_eigs: &[f64],
    candidate_modes: &[Vec<f64>],
    candidate_eigs: &[f64],
    a: &DiagonalMatrix,
    cluster_rel_gap: f64,
) -> Vec<f64> {
    let scale = reference_eigs
        .iter()
        .chain(candidate_eigs)
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut used = vec![false; candidate_modes.len()];
    let mut out = Vec::with_capacity(reference_modes.len());
    for (i, ref_mode) in reference_modes.iter().enumerate() {
        let ref_norm = a.norm(ref_mode);
        let mut best: Option<(usize, f64)> = None;
        for (j, cand) in candidate_modes.iter().enumerate() {
            if used[j] {
                continue;
            }
            let gap = (reference_eigs[i] - candidate_eigs[j]).abs();
            let tol = cluster_rel_gap * reference_eigs[i].abs().max(candidate_eigs[j].abs())
                + 1e-9 * scale.max(1e-300);
            if gap > tol {
                continue;
            }
            let corr = a.inner(ref_mode, cand).abs() / (ref_norm * a.norm(cand));
            if best.map(|(_, c)| corr > c).unwrap_or(true) {
                best = Some((j, corr));
            }
        }
        match best {
            Some((j, corr)) => {
                used[j] = true;
                out.push(corr);
            }
            None => out.push(0.0),
        }
    }
    out
}
