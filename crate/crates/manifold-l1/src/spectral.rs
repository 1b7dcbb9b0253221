//! Smallest generalized eigenpairs of sparse-plus-low-rank pencils.
//!
//! The operators here have the form B = Q + U U^T with Q sparse symmetric and
//! U holding a few columns (deflation terms). The smallest eigenpair of
//! (B, A) with a positive diagonal A is found by Lanczos iteration on
//! B^{-1} A, which is self-adjoint in the A-inner product. Applications of
//! B^{-1} go through the Woodbury identity: Q is factorized once, the small
//! core matrix I + U^T Q^{-1} U is factorized once, and every inner solve then
//! costs one sparse solve plus small dense algebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::{DiagonalMatrix, LdltFactor, SparseSymmetric};

/// Tall-skinny factor U of a low-rank symmetric term U U^T. `r = 0` means no
/// low-rank part.
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    u: DMatrix<f64>,
}

impl LowRankFactor {
    pub fn empty(n: usize) -> Self {
        Self {
            u: DMatrix::zeros(n, 0),
        }
    }

    pub fn from_columns(n: usize, columns: &[Vec<f64>]) -> Self {
        let mut u = DMatrix::zeros(n, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n {
                u[(i, j)] = col[i];
            }
        }
        Self { u }
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// y = U U^T x
    pub fn apply_outer(&self, x: &[f64]) -> Vec<f64> {
        if self.rank() == 0 {
            return vec![0.0; self.n()];
        }
        let xv = DVector::from_column_slice(x);
        let t = self.u.transpose() * &xv;
        (&self.u * t).as_slice().to_vec()
    }

    /// x^T U U^T x = ||U^T x||^2
    pub fn outer_quadratic_form(&self, x: &[f64]) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let xv = DVector::from_column_slice(x);
        (self.u.transpose() * xv).norm_squared()
    }

    /// ||U||_F^2, an upper bound on ||U U^T||_2.
    pub fn frobenius_sq(&self) -> f64 {
        self.u.iter().map(|v| v * v).sum()
    }
}

/// Deflation factor for previously computed A-orthonormal modes:
/// U = sqrt(beta) * A * Phi, so that U U^T = beta * A Phi Phi^T A.
pub fn deflation_factor(a: &DiagonalMatrix, prev_modes: &[Vec<f64>], beta: f64) -> LowRankFactor {
    let n = a.len();
    let sqrt_beta = beta.sqrt();
    let cols: Vec<Vec<f64>> = prev_modes
        .iter()
        .map(|phi| {
            (0..n)
                .map(|i| sqrt_beta * a.entries()[i] * phi[i])
                .collect()
        })
        .collect();
    LowRankFactor::from_columns(n, &cols)
}

/// Woodbury-accelerated application of (Q + U U^T)^{-1} on top of a fixed
/// factorization of Q. The n-by-r solve table Y = Q^{-1} U and the Cholesky
/// factor of the r-by-r core are built once.
pub struct WoodburyOperator<'a> {
    factor: &'a LdltFactor,
    u: &'a LowRankFactor,
    y: DMatrix<f64>,
    core: Option<Cholesky<f64, Dyn>>,
}

impl<'a> WoodburyOperator<'a> {
    pub fn new(factor: &'a LdltFactor, u: &'a LowRankFactor) -> Result<Self> {
        let n = factor.n();
        let r = u.rank();
        let mut y = DMatrix::zeros(n, r);
        for j in 0..r {
            let col: Vec<f64> = (0..n).map(|i| u.matrix()[(i, j)]).collect();
            let sol = factor.solve(&col);
            for i in 0..n {
                y[(i, j)] = sol[i];
            }
        }
        let core = if r == 0 {
            None
        } else {
            let mut core = u.matrix().transpose() * &y;
            for i in 0..r {
                core[(i, i)] += 1.0;
            }
            Some(Cholesky::new(core).ok_or(Error::CoreSingular)?)
        };
        Ok(Self { factor, u, y, core })
    }

    /// (Q + U U^T)^{-1} rhs
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let psi = self.factor.solve(rhs);
        let Some(core) = &self.core else {
            return psi;
        };
        let psi_v = DVector::from_column_slice(&psi);
        let t = self.u.matrix().transpose() * &psi_v;
        let s = core.solve(&t);
        let xi = &self.y * s;
        psi.iter().zip(xi.iter()).map(|(p, x)| p - x).collect()
    }
}

/// One-shot Woodbury solve of (Q + U U^T) x = rhs given a factorization of Q.
pub fn woodbury_solve(factor: &LdltFactor, u: &LowRankFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != factor.n() {
        return Err(Error::DimensionMismatch {
            expected: factor.n(),
            got: rhs.len(),
        });
    }
    Ok(WoodburyOperator::new(factor, u)?.solve(rhs))
}

/// Factorize Q, shifting by multiples of A when Q is singular or indefinite:
/// sigma starts at 1e-8 * trace(Q)/n and doubles, up to five attempts.
/// Returns the factor of Q + sigma A and the shift used.
pub fn factorize_with_shift(q: &SparseSymmetric, a: &DiagonalMatrix) -> Result<(LdltFactor, f64)> {
    if let Ok(f) = q.factorize() {
        if !f.near_singular() {
            return Ok((f, 0.0));
        }
    }
    let n = q.n() as f64;
    let trace: f64 = q.diag().iter().sum();
    let mut sigma = 1e-8 * trace.abs() / n;
    if !(sigma > 0.0) {
        sigma = 1e-8 * q.inf_norm().max(1e-300);
    }
    for attempt in 0..5 {
        let shifted = q.with_added_diagonal(a.entries(), sigma)?;
        if let Ok(f) = shifted.factorize() {
            if !f.near_singular() {
                return Ok((f, sigma));
            }
        }
        sigma *= 2.0;
        let _ = attempt;
    }
    Err(Error::ShiftFailure { attempts: 5 })
}

#[derive(Clone, Copy, Debug)]
pub enum StartVector {
    /// All-ones, deflated against the low-rank subspace; falls back to a
    /// fixed pseudo-random stream when the deflated vector vanishes.
    Ones,
    /// Seeded pseudo-random start, for comparisons against random
    /// initialization.
    Seeded(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    /// Convergence tolerance: on the A-angle between successive Ritz
    /// iterates, and (scaled by an estimate of ||B||) on the eigenpair
    /// residual.
    pub tol: f64,
    /// Cap on operator applications (= Lanczos steps).
    pub max_iters: usize,
    pub start: StartVector,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 500,
            start: StartVector::Ones,
        }
    }
}

/// Smallest generalized eigenpair, with residual and work counters.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    /// ||(Q + U U^T) phi - lambda A phi|| / ||phi||
    pub residual: f64,
    /// Operator applications consumed.
    pub iterations: usize,
}

/// Flip the vector so its largest-magnitude entry is positive (first such
/// entry on ties).
pub(crate) fn sign_fix(x: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, &v) in x.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    if x[idx] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// A-orthonormal basis of the deflation span {A^{-1} u_j} via modified
/// Gram-Schmidt in the A-inner product.
fn deflation_basis(u: &LowRankFactor, a: &DiagonalMatrix) -> Vec<Vec<f64>> {
    let n = u.n();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..u.rank() {
        let mut v: Vec<f64> = (0..n)
            .map(|i| u.matrix()[(i, j)] / a.entries()[i])
            .collect();
        for b in &basis {
            let c = a.inner(&v, b);
            for i in 0..n {
                v[i] -= c * b[i];
            }
        }
        let nrm = a.norm(&v);
        if nrm > 1e-12 {
            for vi in v.iter_mut() {
                *vi /= nrm;
            }
            basis.push(v);
        }
    }
    basis
}

fn project_out(x: &mut [f64], basis: &[Vec<f64>], a: &DiagonalMatrix) {
    for b in basis {
        let c = a.inner(x, b);
        for i in 0..x.len() {
            x[i] -= c * b[i];
        }
    }
}

fn start_vector(
    n: usize,
    basis: &[Vec<f64>],
    a: &DiagonalMatrix,
    start: StartVector,
    rank: usize,
) -> Vec<f64> {
    let mut candidate = match start {
        StartVector::Ones => vec![1.0; n],
        StartVector::Seeded(seed) => {
            let mut rng = SplitMix64::new(seed);
            (0..n).map(|_| rng.next_normal()).collect()
        }
    };
    project_out(&mut candidate, basis, a);
    // The fallback stream must differ per deflation rank: reusing one fixed
    // vector would leave successive solves with no fresh component inside an
    // exactly degenerate eigenvalue cluster (each extraction removes the
    // vector's entire projection onto that cluster).
    let base = 0xA11C_E5EDu64 ^ (rank as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut attempt = 0u64;
    while a.norm(&candidate) <= 1e-10 && attempt < 8 {
        let seed = match start {
            StartVector::Ones => base ^ attempt,
            StartVector::Seeded(s) => s
                .wrapping_add(1 + attempt)
                .wrapping_add((rank as u64).wrapping_mul(0x9E37_79B9)),
        };
        let mut rng = SplitMix64::new(seed);
        candidate = (0..n).map(|_| rng.next_normal()).collect();
        project_out(&mut candidate, basis, a);
        attempt += 1;
    }
    candidate
}

/// Ritz vector of the largest eigenvalue of the tridiagonal projection,
/// assembled in the Lanczos basis and A-normalized.
fn top_ritz_vector(
    basis: &[Vec<f64>],
    alphas: &[f64],
    betas: &[f64],
    a: &DiagonalMatrix,
) -> Vec<f64> {
    let k = alphas.len();
    let n = basis[0].len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let y = eig.eigenvectors.column(best);
    let mut ritz = vec![0.0; n];
    for (j, b) in basis.iter().take(k).enumerate() {
        let c = y[j];
        for i in 0..n {
            ritz[i] += c * b[i];
        }
    }
    let nrm = a.norm(&ritz);
    for v in ritz.iter_mut() {
        *v /= nrm;
    }
    ritz
}

fn rayleigh_and_residual(
    q: &SparseSymmetric,
    u: &LowRankFactor,
    a: &DiagonalMatrix,
    x: &[f64],
) -> (f64, f64) {
    let qx = q.matvec(x);
    let ux = u.apply_outer(x);
    let ax = a.apply(x);
    let num: f64 = x
        .iter()
        .zip(qx.iter().zip(&ux))
        .map(|(&xi, (&qi, &ui))| xi * (qi + ui))
        .sum();
    let den: f64 = x.iter().zip(&ax).map(|(&xi, &ai)| xi * ai).sum();
    let lambda = num / den;
    let mut res_sq = 0.0;
    let mut x_sq = 0.0;
    for i in 0..x.len() {
        let r = qx[i] + ux[i] - lambda * ax[i];
        res_sq += r * r;
        x_sq += x[i] * x[i];
    }
    (lambda, (res_sq / x_sq).sqrt())
}

fn smallest_eigpair_with_factor(
    factor: &LdltFactor,
    q: &SparseSymmetric,
    u: &LowRankFactor,
    a: &DiagonalMatrix,
    opts: &EigOptions,
) -> Result<EigenResult> {
    let n = q.n();
    let wood = WoodburyOperator::new(factor, u)?;
    let deflation_span = deflation_basis(u, a);
    let x0 = start_vector(n, &deflation_span, a, opts.start, u.rank());
    // scale estimate for the residual exit test: ||B||_inf up to the
    // low-rank bound ||U U^T||_2 <= ||U||_F^2
    let b_scale = q.inf_norm() + u.frobenius_sq();
    let m_cap = opts.max_iters.min(n);

    // One growing Lanczos sweep with full reorthogonalization, checking the
    // top Ritz pair periodically. A single sweep (rather than single-vector
    // restarts) is what resolves tightly clustered smallest eigenvalues.
    let mut v = x0;
    let nrm = a.norm(&v);
    for vi in v.iter_mut() {
        *vi /= nrm;
    }
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut scale = 0.0f64;
    let mut prev_ritz: Option<Vec<f64>> = None;
    let mut next_check = 8usize.min(m_cap);

    loop {
        let j = alphas.len();
        let mut w = wood.solve(&a.apply(&basis[j]));
        let alpha = a.inner(&w, &basis[j]);
        alphas.push(alpha);
        scale = scale.max(alpha.abs());
        for i in 0..n {
            w[i] -= alpha * basis[j][i];
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            for i in 0..n {
                w[i] -= beta_prev * basis[j - 1][i];
            }
        }
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for b in &basis {
                let c = a.inner(&w, b);
                if c != 0.0 {
                    for i in 0..n {
                        w[i] -= c * b[i];
                    }
                }
            }
        }
        let beta = a.norm(&w);
        scale = scale.max(beta);
        let breakdown = beta <= 1e-14 * scale.max(1e-300);
        let steps = alphas.len();
        let at_cap = steps == m_cap;
        if !breakdown && !at_cap {
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            betas.push(beta);
            basis.push(w);
        }

        if steps >= next_check || breakdown || at_cap {
            let mut x = top_ritz_vector(&basis, &alphas, &betas, a);
            let (lambda, residual) = rayleigh_and_residual(q, u, a, &x);
            let residual_ok = residual <= opts.tol * b_scale;
            let angle_ok = match &prev_ritz {
                Some(p) => {
                    let cos = a.inner(&x, p).abs().min(1.0);
                    (1.0 - cos * cos).max(0.0).sqrt() < opts.tol
                }
                None => false,
            };
            // a breakdown means the Krylov space is invariant: the Ritz pair
            // is exact for the subspace containing the start vector
            if residual_ok || angle_ok || breakdown {
                sign_fix(&mut x);
                return Ok(EigenResult {
                    eigenvalue: lambda,
                    eigenvector: x,
                    residual,
                    iterations: steps,
                });
            }
            if at_cap {
                return Err(Error::NoConvergence {
                    iterations: steps,
                    residual,
                });
            }
            prev_ritz = Some(x);
            next_check = steps + (steps / 4).max(8);
        }
    }
}

/// Smallest generalized eigenpair of (Q + U U^T, A).
///
/// Q is factorized (with an automatic tiny A-shift when singular), and the
/// iteration runs entirely through Woodbury solves. The eigenvalue is the
/// Rayleigh quotient with respect to the unshifted pencil, and the returned
/// eigenvector is A-normalized with its largest-magnitude entry positive.
pub fn smallest_generalized_eigpair(
    q: &SparseSymmetric,
    u: &LowRankFactor,
    a: &DiagonalMatrix,
    opts: &EigOptions,
) -> Result<EigenResult> {
    let (factor, _sigma) = factorize_with_shift(q, a)?;
    smallest_eigpair_with_factor(&factor, q, u, a, opts)
}

/// Sequence of the k smallest eigenpairs of (Q, A) by repeated deflation,
/// reusing a single factorization of Q across all modes.
pub fn smallest_eigpairs(
    q: &SparseSymmetric,
    a: &DiagonalMatrix,
    k: usize,
    beta_override: Option<f64>,
    opts: &EigOptions,
) -> Result<Vec<EigenResult>> {
    let (factor, _sigma) = factorize_with_shift(q, a)?;
    let beta = beta_override.unwrap_or_else(|| default_deflation_beta(q, a));
    let mut results: Vec<EigenResult> = Vec::with_capacity(k);
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in 0..k {
        let u = deflation_factor(a, &modes, beta);
        let mode_opts = EigOptions {
            start: match opts.start {
                StartVector::Ones => StartVector::Ones,
                StartVector::Seeded(s) => StartVector::Seeded(s.wrapping_add(i as u64)),
            },
            ..*opts
        };
        let res = smallest_eigpair_with_factor(&factor, q, &u, a, &mode_opts)?;
        modes.push(res.eigenvector.clone());
        results.push(res);
    }
    Ok(results)
}

/// Default deflation weight: ten times the Gersgorin bound on the pencil
/// spectrum, so deflated modes always sit far above the sought ones.
pub fn default_deflation_beta(q: &SparseSymmetric, a: &DiagonalMatrix) -> f64 {
    let bound = q.pencil_upper_bound(a);
    if bound > 0.0 {
        10.0 * bound
    } else {
        1.0
    }
}

/// Full A-orthonormal spectrum of a dense symmetric pencil (B, A), sorted by
/// ascending eigenvalue. The dense test oracle, and the mu = 0 baseline.
pub fn dense_generalized_eig(
    b: &DMatrix<f64>,
    a: &DiagonalMatrix,
    dense_limit: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = b.nrows();
    if n > dense_limit {
        return Err(Error::SizeLimitExceeded {
            n,
            limit: dense_limit,
        });
    }
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    let s: Vec<f64> = a.entries().iter().map(|&v| v.sqrt()).collect();
    let mut m = b.clone();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] /= s[i] * s[j];
        }
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut out = Vec::with_capacity(n);
    for &k in &order {
        let mut phi: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, k)] / s[i]).collect();
        sign_fix(&mut phi);
        out.push((eig.eigenvalues[k], phi));
    }
    Ok(out)
}

/// The k smallest harmonic eigenpairs of a stiffness/mass pencil, taking the
/// dense route for small problems and the deflated iterative route otherwise.
pub fn harmonic_basis(
    q: &SparseSymmetric,
    a: &DiagonalMatrix,
    k: usize,
    dense_limit: usize,
    opts: &EigOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = q.n();
    if k > n {
        return Err(Error::InvalidOptions(format!(
            "requested {k} eigenpairs from an {n}-dimensional problem"
        )));
    }
    if n <= dense_limit {
        let mut pairs = dense_generalized_eig(&q.to_dense(), a, dense_limit)?;
        pairs.truncate(k);
        Ok(pairs)
    } else {
        let results = smallest_eigpairs(q, a, k, None, opts)?;
        Ok(results
            .into_iter()
            .map(|r| (r.eigenvalue, r.eigenvector))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::AreaScheme;
    use crate::operators::{cotangent_stiffness, lumped_mass};
    use crate::rng::SplitMix64;
    use crate::shapes;
    use crate::sparse::SymmetricAssembler;

    fn random_spd(n: usize, rng: &mut SplitMix64) -> SparseSymmetric {
        let mut asm = SymmetricAssembler::new(n);
        let mut row_abs = vec![0.0f64; n];
        for i in 0..n {
            for _ in 0..4 {
                let j = (rng.next_u64() as usize) % n;
                if j != i {
                    let v = rng.next_symmetric();
                    asm.add_sym(i, j, v);
                    row_abs[i] += v.abs();
                    row_abs[j] += v.abs();
                }
            }
        }
        for i in 0..n {
            asm.add_diag(i, row_abs[i] + 0.5 + rng.next_f64());
        }
        asm.build()
    }

    #[test]
    fn woodbury_rank_zero_is_plain_solve() {
        let mut rng = SplitMix64::new(1);
        let q = random_spd(30, &mut rng);
        let factor = q.factorize().unwrap();
        let rhs: Vec<f64> = (0..30).map(|_| rng.next_normal()).collect();
        let plain = factor.solve(&rhs);
        let wood = woodbury_solve(&factor, &LowRankFactor::empty(30), &rhs).unwrap();
        assert_eq!(plain, wood);
    }

    #[test]
    fn woodbury_identity_plus_e1() {
        let q = SparseSymmetric::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let factor = q.factorize().unwrap();
        let u = LowRankFactor::from_columns(3, &[vec![1.0, 0.0, 0.0]]);
        let x = woodbury_solve(&factor, &u, &[2.0, 2.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
        assert!((x[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn woodbury_matches_dense_on_random_systems() {
        let mut rng = SplitMix64::new(42);
        for trial in 0..10 {
            let n = 200;
            let q = random_spd(n, &mut rng);
            let cols: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n).map(|_| rng.next_normal()).collect())
                .collect();
            let u = LowRankFactor::from_columns(n, &cols);
            let rhs: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();

            let factor = q.factorize().unwrap();
            let x = woodbury_solve(&factor, &u, &rhs).unwrap();

            let dense = q.to_dense() + u.matrix() * u.matrix().transpose();
            let xd = dense.lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..n {
                err = err.max((x[i] - xd[i]).abs());
                scale = scale.max(xd[i].abs());
            }
            assert!(err <= 1e-10 * scale.max(1.0), "trial {trial}: err {err}");
        }
    }

    #[test]
    fn woodbury_consistency_residual() {
        let mut rng = SplitMix64::new(7);
        let n = 120;
        let q = random_spd(n, &mut rng);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.next_normal()).collect())
            .collect();
        let u = LowRankFactor::from_columns(n, &cols);
        let factor = q.factorize().unwrap();
        let rhs: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let x = woodbury_solve(&factor, &u, &rhs).unwrap();
        let bx: Vec<f64> = q
            .matvec(&x)
            .iter()
            .zip(u.apply_outer(&x))
            .map(|(a, b)| a + b)
            .collect();
        let res: f64 = bx
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let rhs_norm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * rhs_norm, "residual {res}");
    }

    #[test]
    fn deflation_factor_reconstruction() {
        let a = DiagonalMatrix::new(vec![1.0, 1.0, 1.0]);
        assert_eq!(deflation_factor(&a, &[], 4.0).rank(), 0);

        let phi = vec![0.5, -0.5, 0.25];
        let u = deflation_factor(&a, std::slice::from_ref(&phi), 4.0);
        for i in 0..3 {
            assert!((u.matrix()[(i, 0)] - 2.0 * phi[i]).abs() < 1e-15);
        }

        // dense reconstruction against beta * A Phi Phi^T A
        let mut rng = SplitMix64::new(3);
        let n = 12;
        let ad = DiagonalMatrix::new((0..n).map(|_| 0.5 + rng.next_f64()).collect());
        let modes: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.next_normal()).collect())
            .collect();
        let beta = 7.5;
        let u = deflation_factor(&ad, &modes, beta);
        let uut = u.matrix() * u.matrix().transpose();
        let mut oracle = DMatrix::zeros(n, n);
        for phi in &modes {
            for i in 0..n {
                for j in 0..n {
                    oracle[(i, j)] += beta * ad.entries()[i] * phi[i] * phi[j] * ad.entries()[j];
                }
            }
        }
        assert!((uut - oracle).amax() < 1e-12);
    }

    #[test]
    fn diagonal_eigenproblem() {
        let q = SparseSymmetric::from_triplets(3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
        let a = DiagonalMatrix::identity(3);
        let res =
            smallest_generalized_eigpair(&q, &LowRankFactor::empty(3), &a, &EigOptions::default())
                .unwrap();
        assert!((res.eigenvalue - 1.0).abs() < 1e-10);
        assert!((res.eigenvector[0].abs() - 1.0).abs() < 1e-8);
        assert!(res.eigenvector[0] > 0.0, "sign fixed");
        assert!(res.eigenvector[1].abs() < 1e-8);
    }

    #[test]
    fn laplacian_null_space_mode() {
        let mesh = shapes::icosphere(1.0, 1);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let res = smallest_generalized_eigpair(
            &w,
            &LowRankFactor::empty(w.n()),
            &a,
            &EigOptions::default(),
        )
        .unwrap();
        assert!(res.eigenvalue.abs() < 1e-8, "lambda = {}", res.eigenvalue);
        // constant vector, A-normalized
        let expect = 1.0 / a.trace().sqrt();
        for &v in &res.eigenvector {
            assert!((v - expect).abs() < 1e-6, "entry {v} vs {expect}");
        }
    }

    #[test]
    fn matches_dense_oracle_with_low_rank_term() {
        let mut rng = SplitMix64::new(99);
        let n = 200;
        let q = random_spd(n, &mut rng);
        let a = DiagonalMatrix::new((0..n).map(|_| 0.5 + rng.next_f64()).collect());
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.next_normal() * 0.5).collect())
            .collect();
        let u = LowRankFactor::from_columns(n, &cols);

        let res = smallest_generalized_eigpair(&q, &u, &a, &EigOptions::default()).unwrap();

        let dense = q.to_dense() + u.matrix() * u.matrix().transpose();
        let oracle = dense_generalized_eig(&dense, &a, 2000).unwrap();
        let (lam0, phi0) = &oracle[0];

        assert!(
            (res.eigenvalue - lam0).abs() <= 1e-8 * lam0.abs().max(1.0),
            "lambda {} vs {}",
            res.eigenvalue,
            lam0
        );
        // A-normalize the oracle vector and compare after sign alignment
        let nrm = a.norm(phi0);
        let mut err = 0.0f64;
        for i in 0..n {
            err = err.max((res.eigenvector[i] - phi0[i] / nrm).abs());
        }
        assert!(err < 1e-6, "vector deviation {err}");
    }

    #[test]
    fn deflated_modes_are_a_orthogonal() {
        let mesh = shapes::torus(10, 8, 1.0, 0.4);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let results = smallest_eigpairs(&w, &a, 6, None, &EigOptions::default()).unwrap();
        for i in 0..6 {
            for j in 0..i {
                let ip = a
                    .inner(&results[i].eigenvector, &results[j].eigenvector)
                    .abs();
                assert!(ip <= 1e-6, "modes {i},{j}: {ip}");
            }
            let unit = a.inner(&results[i].eigenvector, &results[i].eigenvector);
            assert!((unit - 1.0).abs() <= 1e-10);
        }
        // eigenvalues ascending
        for pair in results.windows(2) {
            assert!(pair[0].eigenvalue <= pair[1].eigenvalue + 1e-9);
        }
    }

    #[test]
    fn sphere_spectrum_dense_oracle() {
        let mesh = shapes::icosphere(1.0, 3);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let pairs = dense_generalized_eig(&w.to_dense(), &a, 2000).unwrap();
        // smallest nonzero eigenvalue of the unit sphere is 2
        assert!(pairs[0].0.abs() < 1e-8);
        for k in 1..=3 {
            assert!(
                (pairs[k].0 - 2.0).abs() < 0.02 * 2.0,
                "lambda_{k} = {}",
                pairs[k].0
            );
        }
    }

    #[test]
    fn dense_eig_sorted_examples() {
        let a = DiagonalMatrix::identity(3);
        let b = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let pairs = dense_generalized_eig(&b, &a, 10).unwrap();
        let lambdas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        assert!((lambdas[0] - 1.0).abs() < 1e-12);
        assert!((lambdas[1] - 2.0).abs() < 1e-12);
        assert!((lambdas[2] - 3.0).abs() < 1e-12);

        assert!(matches!(
            dense_generalized_eig(&b, &a, 2),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn determinism_of_eigensolver() {
        let mesh = shapes::torus(8, 6, 1.0, 0.3);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let r1 = smallest_eigpairs(&w, &a, 4, None, &EigOptions::default()).unwrap();
        let r2 = smallest_eigpairs(&w, &a, 4, None, &EigOptions::default()).unwrap();
        for (x, y) in r1.iter().zip(&r2) {
            assert_eq!(x.eigenvalue.to_bits(), y.eigenvalue.to_bits());
            for (a, b) in x.eigenvector.iter().zip(&y.eigenvector) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn scale_consistency_of_eigenvalues() {
        // scaling the mesh by s scales eigenvalues by 1/s^2
        let mesh = shapes::torus(8, 6, 1.0, 0.3);
        let scaled = crate::mesh::TriangleMesh::new(
            mesh.vertices()
                .iter()
                .map(|v| [3.0 * v[0], 3.0 * v[1], 3.0 * v[2]])
                .collect(),
            mesh.faces().to_vec(),
        )
        .unwrap();
        let pairs = |m: &crate::mesh::TriangleMesh| {
            let w = cotangent_stiffness(m);
            let a = lumped_mass(m, AreaScheme::Barycentric);
            smallest_eigpairs(&w, &a, 4, None, &EigOptions::default()).unwrap()
        };
        let base = pairs(&mesh);
        let big = pairs(&scaled);
        for (b, s) in base.iter().zip(&big).skip(1) {
            let ratio = b.eigenvalue / s.eigenvalue;
            assert!(
                (ratio - 9.0).abs() <= 1e-10 * 9.0,
                "ratio {ratio} (base {}, scaled {})",
                b.eigenvalue,
                s.eigenvalue
            );
        }
    }

    #[test]
    fn tight_iteration_budget_reports_no_convergence() {
        let mesh = shapes::torus(10, 8, 1.0, 0.4);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let opts = EigOptions {
            max_iters: 2,
            start: StartVector::Seeded(1),
            ..Default::default()
        };
        match smallest_generalized_eigpair(&w, &LowRankFactor::empty(w.n()), &a, &opts) {
            Err(Error::NoConvergence {
                iterations,
                residual,
            }) => {
                assert!(iterations <= 2);
                assert!(residual.is_finite());
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn iterative_harmonic_basis_matches_dense_route() {
        // the sphere spectrum is all exact multiplicities (1, 3, 5, 4, ...);
        // repeated deflated extraction must walk through every cluster member
        let mesh = shapes::icosphere(1.0, 2);
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let k = 13;
        // force the iterative route with a lowered dense limit
        let iterative = harmonic_basis(&w, &a, k, 100, &EigOptions::default()).unwrap();
        let dense = harmonic_basis(&w, &a, k, 2000, &EigOptions::default()).unwrap();
        let scale = dense[k - 1].0;
        for (it, dn) in iterative.iter().zip(&dense) {
            assert!(
                (it.0 - dn.0).abs() <= 1e-8 * dn.0.abs().max(scale),
                "eigenvalue {} vs {}",
                it.0,
                dn.0
            );
        }
    }

    #[test]
    fn negative_definite_matrix_reports_shift_failure() {
        let n = 5;
        let triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, -1.0)).collect();
        let q = SparseSymmetric::from_triplets(n, &triplets);
        let a = DiagonalMatrix::identity(n);
        match factorize_with_shift(&q, &a) {
            Err(Error::ShiftFailure { attempts }) => assert_eq!(attempts, 5),
            other => panic!("expected ShiftFailure, got {other:?}"),
        }
    }
}
