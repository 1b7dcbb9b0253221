//! Sparse symmetric matrices and an LDL^T factorization.
//!
//! Storage is full-symmetric CSR with sorted column indices. The diagonal is
//! always stored explicitly (a zero diagonal entry is kept) so that diagonal
//! updates and dominance repair never change the sparsity pattern. Off-diagonal
//! entries that sum to exactly zero during assembly are dropped.
//!
//! The factorization is the classic up-looking elimination-tree LDL^T on a
//! reverse Cuthill-McKee ordering. Pivots are exposed, so callers can tell a
//! positive definite matrix from a semidefinite or indefinite one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::CellAreaVector;

/// Positive diagonal matrices (mass, reweighting, potentials).
#[derive(Clone, Debug)]
pub struct DiagonalMatrix {
    entries: Vec<f64>,
}

impl DiagonalMatrix {
    pub fn new(entries: Vec<f64>) -> Self {
        Self { entries }
    }

    pub fn from_cell_areas(areas: &CellAreaVector) -> Self {
        Self {
            entries: areas.areas().to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries.iter().zip(x).map(|(d, v)| d * v).collect()
    }

    /// Mass-weighted inner product x^T D y.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.entries
            .iter()
            .zip(x)
            .zip(y)
            .map(|((d, a), b)| d * a * b)
            .sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }
}

/// Accumulates (i, j, value) contributions and compresses them into a
/// [`SparseSymmetric`]. Duplicates are summed in insertion order, so the
/// result is bitwise deterministic.
#[derive(Clone, Debug)]
pub struct SymmetricAssembler {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SymmetricAssembler {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.triplets.push((i, j, value));
    }

    /// Add `value` at (i, j) and (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, value: f64) {
        self.triplets.push((i, j, value));
        self.triplets.push((j, i, value));
    }

    pub fn add_diag(&mut self, i: usize, value: f64) {
        self.triplets.push((i, i, value));
    }

    pub fn build(mut self) -> SparseSymmetric {
        // Stable sort keeps duplicate contributions in insertion order, so the
        // (i, j) and (j, i) sums see identical addend sequences.
        self.triplets.sort_by_key(|&(i, j, _)| (i, j));
        let n = self.n;
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();

        let mut t = 0;
        for i in 0..n {
            let mut has_diag = false;
            while t < self.triplets.len() && self.triplets[t].0 == i {
                let j = self.triplets[t].1;
                let mut sum = 0.0;
                while t < self.triplets.len() && self.triplets[t].0 == i && self.triplets[t].1 == j
                {
                    sum += self.triplets[t].2;
                    t += 1;
                }
                if j == i {
                    has_diag = true;
                    col_idx.push(j);
                    values.push(sum);
                } else if sum != 0.0 {
                    if j > i && !has_diag {
                        col_idx.push(i);
                        values.push(0.0);
                        has_diag = true;
                    }
                    col_idx.push(j);
                    values.push(sum);
                }
            }
            if !has_diag {
                col_idx.push(i);
                values.push(0.0);
            }
            // restore sorted column order in case the diagonal was inserted late
            let start = row_ptr[i];
            let row_cols = &mut col_idx[start..];
            if !row_cols.windows(2).all(|w| w[0] < w[1]) {
                let mut paired: Vec<(usize, f64)> = col_idx[start..]
                    .iter()
                    .cloned()
                    .zip(values[start..].iter().cloned())
                    .collect();
                paired.sort_by_key(|&(c, _)| c);
                for (k, (c, v)) in paired.into_iter().enumerate() {
                    col_idx[start + k] = c;
                    values[start + k] = v;
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }

        SparseSymmetric {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Symmetric sparse matrix in full CSR form.
#[derive(Clone, Debug)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut asm = SymmetricAssembler::new(n);
        for &(i, j, v) in triplets {
            asm.add(i, j, v);
        }
        asm.build()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .position(|&c| c == i)
                    .map(|p| vals[p])
                    .unwrap_or(0.0)
            })
            .collect()
    }

    fn diag_position(&self, i: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .binary_search(&i)
            .ok()
            .map(|p| self.row_ptr[i] + p)
    }

    /// New matrix equal to `self + scale * diag(d)`. The diagonal is always
    /// stored, so the sparsity pattern is unchanged.
    pub fn with_added_diagonal(&self, d: &[f64], scale: f64) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: d.len(),
            });
        }
        let mut out = self.clone();
        for i in 0..self.n {
            let p = out.diag_position(i).expect("diagonal is always stored");
            out.values[p] += scale * d[i];
        }
        Ok(out)
    }

    pub fn set_diag_entry(&mut self, i: usize, value: f64) {
        let p = self.diag_position(i).expect("diagonal is always stored");
        self.values[p] = value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            total += x[i] * acc;
        }
        total
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from symmetry; zero for matrices built through the
    /// assembler.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let (jc, jv) = self.row(j);
                let mirrored = jc.binary_search(&i).ok().map(|p| jv[p]).unwrap_or(0.0);
                worst = worst.max((v - mirrored).abs());
            }
        }
        worst
    }

    /// Gersgorin upper bound on the eigenvalues of the pencil (B, D) with a
    /// positive diagonal D.
    pub fn pencil_upper_bound(&self, d: &DiagonalMatrix) -> f64 {
        (0..self.n)
            .map(|i| {
                let row_sum: f64 = self.row(i).1.iter().map(|v| v.abs()).sum();
                row_sum / d.entries()[i]
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Reverse Cuthill-McKee ordering of the adjacency pattern.
    fn rcm_order(&self) -> Vec<usize> {
        let n = self.n;
        let degree: Vec<usize> = (0..n).map(|i| self.row(i).0.len()).collect();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);

        let bfs = |start: usize, visited: &mut Vec<bool>, order: &mut Vec<usize>| {
            let mut queue = std::collections::VecDeque::new();
            visited[start] = true;
            queue.push_back(start);
            let begin = order.len();
            while let Some(u) = queue.pop_front() {
                order.push(u);
                let (cols, _) = self.row(u);
                let mut nbrs: Vec<usize> = cols
                    .iter()
                    .cloned()
                    .filter(|&v| v != u && !visited[v])
                    .collect();
                nbrs.sort_by_key(|&v| (degree[v], v));
                for v in nbrs {
                    if !visited[v] {
                        visited[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            begin
        };

        // pseudo-peripheral start for one component
        let far_node = |start: usize| -> usize {
            let mut seen = vec![false; n];
            let mut frontier = vec![start];
            seen[start] = true;
            let mut last = vec![start];
            while !frontier.is_empty() {
                last = frontier.clone();
                let mut next = Vec::new();
                for &u in &frontier {
                    for &v in self.row(u).0 {
                        if v != u && !seen[v] {
                            seen[v] = true;
                            next.push(v);
                        }
                    }
                }
                frontier = next;
            }
            *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap()
        };

        while order.len() < n {
            let seed = (0..n)
                .filter(|&i| !visited[i])
                .min_by_key(|&i| (degree[i], i))
                .unwrap();
            let start = far_node(far_node(seed));
            bfs(start, &mut visited, &mut order);
        }
        order.reverse();
        order
    }

    /// LDL^T factorization. Fails with [`Error::NotPositiveDefinite`] when a
    /// pivot is non-positive or non-finite (semidefinite or indefinite input).
    pub fn factorize(&self) -> Result<LdltFactor> {
        let n = self.n;
        let perm = self.rcm_order();
        let mut inv_perm = vec![0usize; n];
        for (k, &orig) in perm.iter().enumerate() {
            inv_perm[orig] = k;
        }

        // permuted matrix in CSR with sorted columns
        let mut prow_ptr = vec![0usize; n + 1];
        let mut pcols: Vec<usize> = Vec::with_capacity(self.nnz());
        let mut pvals: Vec<f64> = Vec::with_capacity(self.nnz());
        for k in 0..n {
            let (cols, vals) = self.row(perm[k]);
            let mut entries: Vec<(usize, f64)> = cols
                .iter()
                .map(|&j| inv_perm[j])
                .zip(vals.iter().cloned())
                .collect();
            entries.sort_by_key(|&(c, _)| c);
            for (c, v) in entries {
                pcols.push(c);
                pvals.push(v);
            }
            prow_ptr[k + 1] = pcols.len();
        }

        // symbolic: elimination tree and column counts
        const NONE: usize = usize::MAX;
        let mut parent = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            flag[k] = k;
            for p in prow_ptr[k]..prow_ptr[k + 1] {
                let mut i = pcols[p];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let lnnz = lp[n];

        // numeric
        let mut li = vec![0usize; lnnz];
        let mut lx = vec![0.0f64; lnnz];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lfill = vec![0usize; n];
        for f in flag.iter_mut() {
            *f = NONE;
        }

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            y[k] = 0.0;
            for p in prow_ptr[k]..prow_ptr[k + 1] {
                let col = pcols[p];
                if col <= k {
                    y[col] += pvals[p];
                    let mut len = 0usize;
                    let mut i = col;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        len -= 1;
                        top -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lfill[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let dval = d[i];
                if dval == 0.0 || !dval.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                let l_ki = yi / dval;
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lfill[i] += 1;
            }
            if !(d[k] > 0.0) || !d[k].is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
        }

        let d_min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let d_max = d.iter().cloned().fold(0.0f64, f64::max);
        Ok(LdltFactor {
            n,
            perm,
            lp,
            li,
            lx,
            d,
            d_min,
            d_max,
        })
    }
}

/// Sparse LDL^T factor with fill-reducing permutation.
#[derive(Clone, Debug)]
pub struct LdltFactor {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    d_min: f64,
    d_max: f64,
}

impl LdltFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ratio-based proxy for numerical singularity of a completed
    /// factorization.
    pub fn near_singular(&self) -> bool {
        self.d_min < 1e-12 * self.d_max
    }

    pub fn pivot_range(&self) -> (f64, f64) {
        (self.d_min, self.d_max)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| rhs[self.perm[k]]).collect();
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in 0..n {
            y[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut acc = y[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * y[self.li[p]];
            }
            y[j] = acc;
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
        x
    }
}
