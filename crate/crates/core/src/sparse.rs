//! Compressed sparse row matrices and an envelope LDLᵀ factorization with
//! reverse Cuthill-McKee ordering.
//!
//! The factorization does not pivot, so it is meant for symmetric matrices
//! whose leading minors stay nonsingular (shifted FEM pencils). The pivot signs
//! give the inertia of the matrix by Sylvester's law.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sum duplicate entries; columns sorted within each row.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for i in 0..n_rows {
            let mut row: Vec<(usize, f64)> = (counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])).collect();
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(s);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        dot(x, &ay)
    }

    /// `a * self + b * other`
    pub fn lin_comb(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                t.push((i, j, a * v));
            }
            for (j, v) in other.row(i) {
                t.push((i, j, b * v));
            }
        }
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// Submatrix with the given rows and columns (in the given order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut t = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_map[j] != usize::MAX {
                    t.push((ri, col_map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), &t)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, &t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n_rows;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // (eccentricity, last node of min degree in the last level)
        let mut level = vec![usize::MAX; n];
        level[start] = 0;
        let mut q = VecDeque::from([start]);
        let mut last = start;
        let mut depth = 0;
        while let Some(v) = q.pop_front() {
            if level[v] > depth || (level[v] == depth && degree[v] < degree[last]) {
                depth = level[v];
                last = v;
            }
            for &w in &adj[v] {
                if !visited[w] && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    q.push_back(w);
                }
            }
        }
        (depth, last)
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start: repeat BFS from the far end while eccentricity grows
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) LDLᵀ factor of a symmetrically permuted matrix.
#[derive(Clone, Debug)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    env: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factor a symmetric matrix (both triangles stored). Fails with
    /// [`Error::NotPositiveDefinite`] only when `require_spd` and a pivot is not
    /// positive; fails with [`Error::SingularShift`] on a numerically zero pivot.
    pub fn factor(a: &CsrMatrix, require_spd: bool) -> Result<Self> {
        let perm = rcm_order(a);
        Self::factor_with_order(a, perm, require_spd)
    }

    /// Factor for pivot signs only: small pivots are kept, only an exactly
    /// zero or non-finite pivot fails.
    pub fn factor_for_inertia(a: &CsrMatrix) -> Result<Self> {
        let perm = rcm_order(a);
        Self::factor_impl(a, perm, false, 0.0)
    }

    pub fn factor_with_order(a: &CsrMatrix, perm: Vec<usize>, require_spd: bool) -> Result<Self> {
        Self::factor_impl(a, perm, require_spd, 1e-13)
    }

    fn factor_impl(a: &CsrMatrix, perm: Vec<usize>, require_spd: bool, pivot_tol: f64) -> Result<Self> {
        let n = a.n_rows;
        if a.n_cols != n {
            return Err(Error::InvalidArgument("factorization needs a square matrix".into()));
        }
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = iperm[old];
            for (jo, _) in a.row(old) {
                let j = iperm[jo];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut env = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        for old in 0..n {
            let i = iperm[old];
            for (jo, v) in a.row(old) {
                let j = iperm[jo];
                if j < i {
                    env[start[i] + j - first[i]] += v;
                } else if j == i {
                    d[i] += v;
                }
            }
        }
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let mut w = vec![0.0; n];
        for i in 0..n {
            let fi = first[i];
            let ri = start[i];
            // L[i][j] for j in fi..i
            for j in fi..i {
                let fj = first[j];
                let rj = start[j];
                let k0 = fi.max(fj);
                let mut s = env[ri + j - fi];
                for k in k0..j {
                    s -= w[k] * env[rj + k - fj];
                }
                // w[j] = L[i][j] d[j]; store L[i][j]
                w[j] = s;
                env[ri + j - fi] = s / d[j];
            }
            let mut dii = d[i];
            for j in fi..i {
                dii -= w[j] * env[ri + j - fi];
            }
            if !(dii.abs() > pivot_tol * scale) || !dii.is_finite() {
                return Err(Error::SingularShift {
                    problem: String::new(),
                    lambda: f64::NAN,
                    detail: format!("pivot {i} of {n} is numerically zero ({dii:e})"),
                });
            }
            if require_spd && dii <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {i} of {n} is {dii:e}"
                )));
            }
            d[i] = dii;
        }
        Ok(LdlFactor {
            n,
            perm,
            first,
            start,
            env,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.env.len()
    }

    /// `(negative, positive)` pivot counts.
    pub fn inertia(&self) -> (usize, usize) {
        let neg = self.d.iter().filter(|&&v| v < 0.0).count();
        (neg, self.n - neg)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        // L y = b
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.start[i];
            let mut s = y[i];
            for j in fi..i {
                s -= self.env[ri + j - fi] * y[j];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.start[i];
            let yi = y[i];
            for j in fi..i {
                y[j] -= self.env[ri + j - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Number of eigenvalues of the pencil `(K, M)` strictly below `tau`, from the
/// inertia of `K - tau M`. `M` must be positive definite.
///
/// An exactly zero pivot from a singular leading minor (not an eigenvalue at
/// `tau`) is sidestepped by nudging `tau` by a relative `1e-11`, far below any
/// eigenvalue separation this is used to resolve.
pub fn count_below(k: &CsrMatrix, m: &CsrMatrix, tau: f64) -> Result<usize> {
    let mut last = None;
    for attempt in 0..4 {
        let t = tau * (1.0 - 1e-11 * attempt as f64) - 1e-14 * attempt as f64;
        let a = k.lin_comb(1.0, m, -t);
        match LdlFactor::factor_for_inertia(&a) {
            Ok(f) => return Ok(f.inertia().0),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn inertia_of_shifted_laplacian() {
        // eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 40;
        let a = laplacian_1d(n);
        let m = CsrMatrix::identity(n);
        for tau in [0.1, 0.5, 1.0, 2.0, 3.9] {
            let exact = (1..=n)
                .filter(|&k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos() < tau)
                .count();
            assert_eq!(count_below(&a, &m, tau).unwrap(), exact, "tau {tau}");
        }
    }

    #[test]
    fn spd_check() {
        let a = laplacian_1d(5).lin_comb(1.0, &CsrMatrix::identity(5), -1.0);
        assert!(LdlFactor::factor(&a, true).is_err());
        assert!(LdlFactor::factor(&laplacian_1d(5), true).is_ok());
    }

    #[test]
    fn singular_detected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(LdlFactor::factor(&a, false), Err(Error::SingularShift { .. })));
    }

    fn random_sym(n: usize, entries: &[(usize, usize, f64)], diag: &[f64]) -> CsrMatrix {
        let mut t = Vec::new();
        for &(i, j, v) in entries {
            let (i, j) = (i % n, j % n);
            if i != j {
                t.push((i, j, v));
                t.push((j, i, v));
            }
        }
        for i in 0..n {
            t.push((i, i, diag[i % diag.len()]));
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    proptest! {
        #[test]
        fn solve_matches_dense(
            n in 2usize..25,
            entries in prop::collection::vec((0usize..25, 0usize..25, -1.0f64..1.0), 0..60),
            diag in prop::collection::vec(-3.0f64..3.0, 1..25),
            rhs in prop::collection::vec(-1.0f64..1.0, 25),
        ) {
            let a = random_sym(n, &entries, &diag);
            let dense = a.to_dense();
            let eig = nalgebra::SymmetricEigen::new(dense.clone());
            let min_abs = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            prop_assume!(min_abs > 1e-3);
            if let Ok(f) = LdlFactor::factor(&a, false) {
                let b = &rhs[..n];
                let x = f.solve(b);
                let r = &dense * nalgebra::DVector::from_column_slice(&x) - nalgebra::DVector::from_column_slice(b);
                prop_assert!(r.norm() < 1e-6 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)));
                let neg = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
                prop_assert_eq!(f.inertia().0, neg);
            }
        }

        #[test]
        fn rcm_is_permutation(n in 1usize..40, entries in prop::collection::vec((0usize..40, 0usize..40), 0..80)) {
            let t: Vec<(usize, usize, f64)> = entries.iter().flat_map(|&(i, j)| [(i % n, j % n, 1.0), (j % n, i % n, 1.0)]).collect();
            let a = CsrMatrix::from_triplets(n, n, &t);
            let mut p = rcm_order(&a);
            p.sort_unstable();
            prop_assert_eq!(p, (0..n).collect::<Vec<_>>());
        }
    }
}
