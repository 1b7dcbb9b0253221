//! Iteratively reweighted L2 minimization of quadratic-plus-L1 objectives.
//!
//! Minimizes E(f) + mu * ||f||_L1 where E(f) = f^T Q f + 2 q^T f + c and the
//! L1 term uses either the zeroth- or first-order mesh discretization. Each
//! outer iteration freezes the L1 weights w(f), converts them into a diagonal
//! reweighting C with c_i = w_i / (2 f_i), and solves the resulting sparse
//! symmetric system. Under the first-order scheme the reweighted matrix can
//! lose definiteness; it is then repaired either by Gersgorin diagonal
//! dominance or by projection onto the PSD cone.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::l1::{
    first_order_weights, norm_first, norm_zeroth, zeroth_order_weights, L1Scheme, L1Weights,
    VertexFunction,
};
use crate::mesh::{CellAreaVector, TriangleMesh};
use crate::sparse::{DiagonalMatrix, SparseSymmetric};

/// The L1 term of an objective, bound to the geometry it is discretized on.
///
/// The zeroth-order term only needs cell areas, which keeps synthetic
/// problems (a handful of weighted samples with no mesh) expressible.
#[derive(Clone, Copy, Debug)]
pub enum L1Term<'a> {
    Zeroth(&'a CellAreaVector),
    First(&'a TriangleMesh),
}

impl<'a> L1Term<'a> {
    pub fn on_mesh(mesh: &'a TriangleMesh, areas: &'a CellAreaVector, scheme: L1Scheme) -> Self {
        match scheme {
            L1Scheme::Zeroth => L1Term::Zeroth(areas),
            L1Scheme::First => L1Term::First(mesh),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            L1Term::Zeroth(a) => a.len(),
            L1Term::First(m) => m.vertex_count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scheme(&self) -> L1Scheme {
        match self {
            L1Term::Zeroth(_) => L1Scheme::Zeroth,
            L1Term::First(_) => L1Scheme::First,
        }
    }

    pub fn weights(&self, f: &[f64]) -> Result<L1Weights> {
        match self {
            L1Term::Zeroth(a) => zeroth_order_weights(f, a),
            L1Term::First(m) => first_order_weights(m, f),
        }
    }

    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        match self {
            L1Term::Zeroth(a) => norm_zeroth(f, a),
            L1Term::First(m) => norm_first(m, f),
        }
    }
}

/// Convex quadratic E(f) = f^T Q f + 2 q^T f + c with sparse PSD Q.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    pub quadratic: SparseSymmetric,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticObjective {
    pub fn new(quadratic: SparseSymmetric, linear: Vec<f64>, constant: f64) -> Result<Self> {
        if linear.len() != quadratic.n() {
            return Err(Error::DimensionMismatch {
                expected: quadratic.n(),
                got: linear.len(),
            });
        }
        Ok(Self {
            quadratic,
            linear,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.quadratic.n()
    }

    pub fn eval(&self, f: &[f64]) -> f64 {
        let quad = self.quadratic.quadratic_form(f);
        let lin: f64 = self.linear.iter().zip(f).map(|(q, v)| q * v).sum();
        quad + 2.0 * lin + self.constant
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    Gersgorin,
    PsdProject,
    None,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct IrlsOptions {
    pub scheme: L1Scheme,
    pub mu: f64,
    /// Reweight clamp, relative to max |f_i|.
    pub epsilon_rel: f64,
    pub repair: RepairKind,
    pub max_outer_iters: usize,
    pub objective_rel_tol: f64,
    /// Dense-path cap for the PSD projection repair.
    pub dense_limit: usize,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            scheme: L1Scheme::Zeroth,
            mu: 1.0,
            epsilon_rel: 1e-8,
            repair: RepairKind::Gersgorin,
            max_outer_iters: 200,
            objective_rel_tol: 1e-10,
            dense_limit: 2000,
        }
    }
}

impl IrlsOptions {
    fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidOptions(format!(
                "mu must be >= 0, got {}",
                self.mu
            )));
        }
        if !(self.epsilon_rel > 0.0) {
            return Err(Error::InvalidOptions("epsilon_rel must be positive".into()));
        }
        if self.max_outer_iters < 1 {
            return Err(Error::InvalidOptions("max_outer_iters must be >= 1".into()));
        }
        if !(self.objective_rel_tol > 0.0) {
            return Err(Error::InvalidOptions(
                "objective_rel_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One outer-iteration record. `objective` is the true value
/// E(f) + mu * ||f||, not the surrogate.
#[derive(Clone, Debug, serde::Serialize)]
pub struct IrlsRecord {
    pub iter: usize,
    pub objective: f64,
    pub surrogate: f64,
    pub repaired: usize,
    pub clamped: usize,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct IrlsHistory {
    pub records: Vec<IrlsRecord>,
}

impl IrlsHistory {
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// One JSON object per line, in iteration order.
    pub fn write_json_lines(&self, writer: &mut impl std::io::Write) -> Result<()> {
        for r in &self.records {
            let line = serde_json::json!({
                "iter": r.iter,
                "objective": r.objective,
                "surrogate": r.surrogate,
                "repaired": r.repaired,
                "clamped": r.clamped,
            });
            writeln!(writer, "{line}")?;
        }
        Ok(())
    }
}

/// Diagonal reweighting c_i = w_i / (2 sign(f_i) max(|f_i|, eps)) with
/// eps = epsilon_rel * max_j |f_j|; sign(0) is taken as +1. Returns the
/// diagonal and the number of clamped entries.
pub fn reweight(w: &L1Weights, f: &[f64], epsilon_rel: f64) -> Result<(DiagonalMatrix, usize)> {
    if w.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: f.len(),
        });
    }
    let max_abs = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        // zero function: both schemes produce zero weights there
        return Ok((DiagonalMatrix::new(vec![0.0; f.len()]), 0));
    }
    let eps = epsilon_rel * max_abs;
    let mut clamped = 0;
    let entries = w
        .weights()
        .iter()
        .zip(f)
        .map(|(&wi, &fi)| {
            let sign = if fi < 0.0 { -1.0 } else { 1.0 };
            let mag = fi.abs();
            let denom = if mag < eps {
                clamped += 1;
                eps
            } else {
                mag
            };
            wi / (2.0 * sign * denom)
        })
        .collect();
    Ok((DiagonalMatrix::new(entries), clamped))
}

/// Raise deficient diagonal entries until every row is strictly diagonally
/// dominant. Rows already dominant are untouched; the sparsity pattern never
/// changes. Returns the repaired matrix and the number of modified rows.
pub fn gersgorin_repair(b: &SparseSymmetric) -> (SparseSymmetric, usize) {
    let n = b.n();
    // strict-dominance margin, relative to the largest absolute row sum
    let scale = b.inf_norm();
    let delta = 1e-12 * if scale > 0.0 { scale } else { 1.0 };

    let mut out = b.clone();
    let mut repaired = 0;
    for i in 0..n {
        let (cols, vals) = b.row(i);
        let mut off = 0.0;
        let mut diag = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
            } else {
                off += v.abs();
            }
        }
        if diag <= off {
            out.set_diag_entry(i, off + delta);
            repaired += 1;
        }
    }
    (out, repaired)
}

/// Project a symmetric matrix onto the PSD cone by removing its negative
/// eigenpairs. Dense; refuses matrices above `dense_limit`.
pub fn psd_project(b: &SparseSymmetric, dense_limit: usize) -> Result<DMatrix<f64>> {
    psd_project_counted(b, dense_limit).map(|(m, _)| m)
}

fn psd_project_counted(b: &SparseSymmetric, dense_limit: usize) -> Result<(DMatrix<f64>, usize)> {
    let n = b.n();
    if n > dense_limit {
        return Err(Error::SizeLimitExceeded {
            n,
            limit: dense_limit,
        });
    }
    let dense = b.to_dense();
    let eig = dense.clone().symmetric_eigen();
    let mut out = dense;
    let mut removed = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < 0.0 {
            removed += 1;
            let v = eig.eigenvectors.column(k);
            // subtract lambda * v v^T
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] -= lambda * v[i] * v[j];
                }
            }
        }
    }
    Ok((out, removed))
}

enum SolveRoute {
    Sparse(crate::sparse::LdltFactor),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
}

impl SolveRoute {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            SolveRoute::Sparse(f) => f.solve(rhs),
            SolveRoute::Dense(c) => {
                let x = c.solve(&nalgebra::DVector::from_column_slice(rhs));
                x.as_slice().to_vec()
            }
        }
    }
}

/// Build a solvable route for `b`, applying the configured repair when the
/// plain factorization is unusable (or proactively when `force_repair`).
/// Returns the route and the number of repaired rows (0 when untouched).
fn factorize_with_repair(
    b: &SparseSymmetric,
    repair: RepairKind,
    force_repair: bool,
    dense_limit: usize,
) -> Result<(SolveRoute, usize)> {
    if !force_repair {
        match b.factorize() {
            Ok(f) if !f.near_singular() => return Ok((SolveRoute::Sparse(f), 0)),
            _ => {}
        }
        if repair == RepairKind::None {
            return Err(Error::SolveFailure(
                "matrix is not positive definite and repair is disabled".into(),
            ));
        }
    }
    match repair {
        RepairKind::Gersgorin => {
            let (repaired, count) = gersgorin_repair(b);
            let factor = repaired.factorize().map_err(|_| {
                Error::SolveFailure("factorization failed after Gersgorin repair".into())
            })?;
            Ok((SolveRoute::Sparse(factor), count))
        }
        RepairKind::PsdProject => {
            let (projected, removed) = psd_project_counted(b, dense_limit)?;
            // tiny ridge so the projected (PSD, possibly singular) matrix factors
            let n = projected.nrows();
            let ridge = 1e-12 * projected.amax().max(1.0);
            let mut m = projected;
            for i in 0..n {
                m[(i, i)] += ridge;
            }
            let chol = nalgebra::Cholesky::new(m).ok_or_else(|| {
                Error::SolveFailure("dense factorization failed after PSD projection".into())
            })?;
            Ok((SolveRoute::Dense(chol), removed))
        }
        RepairKind::None => Err(Error::SolveFailure(
            "matrix is not positive definite and repair is disabled".into(),
        )),
    }
}

/// Minimize E(f) + mu * ||f|| by iterative reweighting.
///
/// Starts from the unregularized minimizer of E (Gersgorin-repairing Q if it
/// is singular), then alternates weight updates and sparse solves until the
/// relative change of the true objective drops below `objective_rel_tol` or
/// `max_outer_iters` is reached.
pub fn irls_minimize(
    term: &L1Term,
    obj: &QuadraticObjective,
    opts: &IrlsOptions,
) -> Result<(VertexFunction, IrlsHistory)> {
    opts.validate()?;
    let n = obj.dim();
    if term.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: term.len(),
        });
    }

    let neg_q: Vec<f64> = obj.linear.iter().map(|v| -v).collect();

    // initial iterate: argmin E
    let (route, init_repaired) = factorize_with_repair(
        &obj.quadratic,
        RepairKind::Gersgorin,
        false,
        opts.dense_limit,
    )?;
    let mut f = route.solve(&neg_q);

    let mut history = IrlsHistory::default();
    let objective_of = |f: &[f64]| -> Result<f64> {
        let val = obj.eval(f) + opts.mu * term.norm(f)?;
        if !val.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(val)
    };

    let mut objective = objective_of(&f)?;
    history.records.push(IrlsRecord {
        iter: 0,
        objective,
        surrogate: objective,
        repaired: init_repaired,
        clamped: 0,
    });

    for iter in 1..=opts.max_outer_iters {
        if opts.mu == 0.0 {
            // no L1 term: the initial solve is already the minimizer
            history.records.push(IrlsRecord {
                iter,
                objective,
                surrogate: objective,
                repaired: 0,
                clamped: 0,
            });
            break;
        }

        let w = term.weights(&f)?;
        let (c, clamped) = reweight(&w, &f, opts.epsilon_rel)?;
        let b = obj.quadratic.with_added_diagonal(c.entries(), opts.mu)?;

        // The zeroth-order scheme keeps C nonnegative, so B stays definite
        // whenever Q is; only a negative reweight entry can break that.
        let force_repair = opts.repair != RepairKind::None && c.min_entry() < 0.0;
        let (route, repaired) =
            factorize_with_repair(&b, opts.repair, force_repair, opts.dense_limit)?;
        let full_step = route.solve(&neg_q);

        // The repaired surrogate is not an exact majorizer under the
        // first-order scheme, so a full step can overshoot. The true
        // objective is convex; halve the step until it does not increase.
        let mut accepted: Option<(Vec<f64>, f64)> = None;
        let mut t = 1.0;
        for _ in 0..40 {
            let cand: Vec<f64> = f
                .iter()
                .zip(&full_step)
                .map(|(&fi, &gi)| fi + t * (gi - fi))
                .collect();
            let cand_obj = objective_of(&cand)?;
            if cand_obj <= objective {
                accepted = Some((cand, cand_obj));
                break;
            }
            t *= 0.5;
        }
        let Some((f_new, obj_new)) = accepted else {
            // no step length improves the true objective: stationary for
            // this surrogate
            break;
        };
        f = f_new;
        objective = obj_new;

        let surrogate = obj.eval(&f) + opts.mu * c.inner(&f, &f);
        history.records.push(IrlsRecord {
            iter,
            objective,
            surrogate,
            repaired,
            clamped,
        });

        let records = &history.records;
        let prev = records[records.len() - 2].objective;
        if (objective - prev).abs() <= opts.objective_rel_tol * prev.abs().max(1e-300) {
            break;
        }
    }

    Ok((VertexFunction::new(f)?, history))
}
