//! Compressed sparse row storage and a banded LU with partial pivoting
//! applied after reverse Cuthill–McKee reordering.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::scalar::Real;

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros are kept out.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut rows_of = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if let (Some(&li), Some(&lj)) = (rows_of.last(), col_idx.last()) {
                if li == i && lj == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows_of.push(i);
            col_idx.push(j);
            values.push(v);
        }
        // drop entries that cancelled or were given as zero
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((i, j), v) in rows_of.iter().zip(col_idx.iter()).zip(values.iter()) {
            if *v != T::zero() {
                row_ptr[i + 1] += 1;
                keep_cols.push(*j);
                keep_vals.push(*v);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != T::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v.iter()).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(p) => v[p],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &trip)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `out += alpha * self * x`.
    pub fn gemm_acc(&self, alpha: T, x: &DMatrixView<T>, out: &mut DMatrixViewMut<T>) {
        assert_eq!(x.nrows(), self.ncols);
        assert_eq!(out.nrows(), self.nrows);
        assert_eq!(out.ncols(), x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let (cols, vals) = self.row(i);
                let mut s = T::zero();
                for (&j, &v) in cols.iter().zip(vals) {
                    s += v * x[(j, c)];
                }
                out[(i, c)] += alpha * s;
            }
        }
    }

    /// Symmetric adjacency of the pattern of `A + A^T`, without the diagonal.
    fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.nrows;
        let mut adj = vec![Vec::new(); n];
        for (i, j, _) in self.triplets() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Reverse Cuthill–McKee ordering of a square sparse matrix. Returns
/// `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let adj = a.symmetric_adjacency();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // lowest-degree unvisited node seeds the component
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        let start = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut node = seed;
    let mut ecc = bfs_levels(node, adj).len();
    loop {
        let levels = bfs_levels(node, adj);
        let cand = *levels
            .last()
            .unwrap()
            .iter()
            .min_by_key(|&&w| degree[w])
            .unwrap();
        let e = bfs_levels(cand, adj).len();
        if e > ecc {
            node = cand;
            ecc = e;
        } else {
            return node;
        }
    }
}

/// LU factorization with partial pivoting of a banded matrix, stored as
/// row segments. The matrix is first symmetrically permuted with RCM.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    perm: Vec<usize>,
    /// U rows; row k holds columns k .. k + width.
    upper: Vec<Vec<T>>,
    /// Multipliers of step k for rows k+1 ..= k+kl.
    lower: Vec<Vec<T>>,
    piv: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    /// Lower and upper bandwidth of `a` after the symmetric permutation
    /// `perm` (`perm[new] = old`).
    pub fn bandwidths(a: &CsrMatrix<T>, perm: &[usize]) -> (usize, usize) {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
        (kl, ku)
    }

    /// Factors `a` under the permutation `perm`. Returns `None` when an
    /// exactly zero pivot is met.
    pub fn factor(a: &CsrMatrix<T>, perm: Vec<usize>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let (kl, ku) = Self::bandwidths(a, &perm);
        let width = 2 * kl + ku + 1;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut rows = vec![vec![T::zero(); width]; n];
        let mut lo: Vec<isize> = (0..n).map(|i| i as isize - kl as isize).collect();
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            rows[pi][(pj as isize - lo[pi]) as usize] = v;
        }
        let mut lower = Vec::with_capacity(n);
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            for i in k..=last {
                let d = (k as isize - lo[i]) as usize;
                if d > 0 {
                    let row = &mut rows[i];
                    row.copy_within(d.., 0);
                    for x in row[width - d..].iter_mut() {
                        *x = T::zero();
                    }
                    lo[i] = k as isize;
                }
            }
            let mut p = k;
            let mut best = rows[k][0].abs();
            for i in k + 1..=last {
                let v = rows[i][0].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return None;
            }
            rows.swap(k, p);
            piv.push(p);
            let (head, tail) = rows.split_at_mut(k + 1);
            let pivot_row = &head[k];
            let mut mult = Vec::with_capacity(last - k);
            for row in tail.iter_mut().take(last - k) {
                let l = row[0] / pivot_row[0];
                mult.push(l);
                if l != T::zero() {
                    for (x, &u) in row.iter_mut().zip(pivot_row.iter()) {
                        *x -= l * u;
                    }
                }
                row[0] = T::zero();
            }
            lower.push(mult);
        }
        Some(BandLu {
            n,
            kl,
            width,
            perm,
            upper: rows,
            lower,
            piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    /// Smallest and largest pivot magnitudes.
    pub fn pivot_range(&self) -> (T, T) {
        let mut lo = T::max_value().unwrap();
        let mut hi = T::zero();
        for r in &self.upper {
            let v = r[0].abs();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Solves `A x = b` for each column of `b`.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, b.ncols());
        let mut w = vec![T::zero(); n];
        for c in 0..b.ncols() {
            for (new, &old) in self.perm.iter().enumerate() {
                w[new] = b[(old, c)];
            }
            for k in 0..n {
                w.swap(k, self.piv[k]);
                let wk = w[k];
                for (i, &l) in self.lower[k].iter().enumerate() {
                    w[k + 1 + i] -= l * wk;
                }
            }
            for k in (0..n).rev() {
                let row = &self.upper[k];
                let mut s = w[k];
                for j in 1..self.width.min(n - k) {
                    s -= row[j] * w[k + j];
                }
                w[k] = s / row[0];
            }
            for (new, &old) in self.perm.iter().enumerate() {
                out[(old, c)] = w[new];
            }
        }
        out
    }

    /// Solves `A^T x = b` for each column of `b`.
    pub fn solve_transpose(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, b.ncols());
        let mut w = vec![T::zero(); n];
        for c in 0..b.ncols() {
            for (new, &old) in self.perm.iter().enumerate() {
                w[new] = b[(old, c)];
            }
            // U^T y = b, forward
            for k in 0..n {
                let row = &self.upper[k];
                let yk = w[k] / row[0];
                w[k] = yk;
                for j in 1..self.width.min(n - k) {
                    w[k + j] -= row[j] * yk;
                }
            }
            // L^T and the interchanges, backward
            for k in (0..n).rev() {
                let mut s = w[k];
                for (i, &l) in self.lower[k].iter().enumerate() {
                    s -= l * w[k + 1 + i];
                }
                w[k] = s;
                w.swap(k, self.piv[k]);
            }
            for (new, &old) in self.perm.iter().enumerate() {
                out[(old, c)] = w[new];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrow_plus_antidiag(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -4.0 - i as f64 * 0.01));
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
                t.push((i + 1, i, 1.5));
            }
            let a = n - 1 - i;
            if a != i {
                t.push((i, a, 0.3));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, 0.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(1, 0), 0.0);
        let (c, _) = m.row(1);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rcm_shrinks_antidiagonal_band() {
        let a = arrow_plus_antidiag(40);
        let ident: Vec<usize> = (0..40).collect();
        let (kl0, _) = BandLu::bandwidths(&a, &ident);
        let perm = reverse_cuthill_mckee(&a);
        let (kl, ku) = BandLu::bandwidths(&a, &perm);
        assert_eq!(kl0, 39);
        assert!(kl <= 4 && ku <= 4, "kl = {kl}, ku = {ku}");
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, ident);
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        let a = arrow_plus_antidiag(31);
        let perm = reverse_cuthill_mckee(&a);
        let lu = BandLu::factor(&a, perm).unwrap();
        let b = DMatrix::from_fn(31, 2, |i, j| (i as f64 * 0.7 + j as f64).sin());
        let x = lu.solve(&b);
        let dense = a.to_dense();
        assert!((&dense * &x - &b).norm() < 1e-12);
        let xt = lu.solve_transpose(&b);
        assert!((dense.transpose() * &xt - &b).norm() < 1e-12);
    }

    #[test]
    fn band_lu_pivots_on_zero_diagonal() {
        // [[0, 1], [1, 0]] needs an interchange
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let lu = BandLu::factor(&a, vec![0, 1]).unwrap();
        let x = lu.solve(&DMatrix::from_column_slice(2, 1, &[2.0, 3.0]));
        assert_eq!(x.as_slice(), &[3.0, 2.0]);
    }

    #[test]
    fn singular_band_returns_none() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(BandLu::factor(&a, vec![0, 1]).is_none());
    }
}
