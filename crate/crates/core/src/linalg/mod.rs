//! Matrix storage used by the system model.
//!
//! System matrices are held either densely or in CSR form. Small or fairly
//! full matrices are kept dense ([`prefers_dense`]); everything the Krylov
//! iteration touches goes through [`SysMatrix::gemm_acc`] so the two storage
//! kinds are interchangeable.

mod factor;
mod sparse;

pub use factor::{LuFactor, MAX_CONDITION, estimate_inverse_norm1, one_norm_condition};
pub use sparse::{BandLu, CsrMatrix, reverse_cuthill_mckee};

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use crate::scalar::Real;

/// Matrices of dimension at most this are always stored dense.
pub const DENSE_DIM_LIMIT: usize = 200;
/// Matrices with at least this fraction of nonzeros are stored dense.
pub const DENSE_FILL_RATIO: f64 = 0.25;

pub fn prefers_dense(nrows: usize, ncols: usize, nnz: usize) -> bool {
    let total = (nrows * ncols).max(1);
    nrows.min(ncols) <= DENSE_DIM_LIMIT
        || nrows.max(ncols) <= DENSE_DIM_LIMIT
        || nnz as f64 >= DENSE_FILL_RATIO * total as f64
}

#[derive(Clone, Debug, PartialEq)]
pub enum SysMatrix<T: Real> {
    Dense(DMatrix<T>),
    Sparse(CsrMatrix<T>),
}

impl<T: Real> SysMatrix<T> {
    /// Stores `m` with the storage kind picked by [`prefers_dense`].
    pub fn auto_dense(m: DMatrix<T>) -> Self {
        let nnz = m.iter().filter(|v| **v != T::zero()).count();
        if prefers_dense(m.nrows(), m.ncols(), nnz) {
            SysMatrix::Dense(m)
        } else {
            SysMatrix::Sparse(CsrMatrix::from_dense(&m))
        }
    }

    pub fn auto_sparse(m: CsrMatrix<T>) -> Self {
        if prefers_dense(m.nrows(), m.ncols(), m.nnz()) {
            SysMatrix::Dense(m.to_dense())
        } else {
            SysMatrix::Sparse(m)
        }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, T)]) -> Self {
        Self::auto_sparse(CsrMatrix::from_triplets(nrows, ncols, trip))
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, &[])
    }

    pub fn nrows(&self) -> usize {
        match self {
            SysMatrix::Dense(m) => m.nrows(),
            SysMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            SysMatrix::Dense(m) => m.ncols(),
            SysMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, SysMatrix::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self {
            SysMatrix::Dense(m) => m[(i, j)],
            SysMatrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            SysMatrix::Dense(m) => m.clone(),
            SysMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn transpose(&self) -> Self {
        match self {
            SysMatrix::Dense(m) => SysMatrix::Dense(m.transpose()),
            SysMatrix::Sparse(m) => SysMatrix::Sparse(m.transpose()),
        }
    }

    pub fn is_finite(&self) -> bool {
        let finite = |v: &T| v.to_f64_lossy().is_finite();
        match self {
            SysMatrix::Dense(m) => m.iter().all(finite),
            SysMatrix::Sparse(m) => m.values().iter().all(finite),
        }
    }

    pub fn norm_fro(&self) -> T {
        match self {
            SysMatrix::Dense(m) => m.norm(),
            SysMatrix::Sparse(m) => m.values().iter().fold(T::zero(), |s, v| s + *v * *v).sqrt(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let mut col = vec![T::zero(); self.ncols()];
        match self {
            SysMatrix::Dense(m) => {
                for j in 0..m.ncols() {
                    col[j] = m.column(j).iter().fold(T::zero(), |s, v| s + v.abs());
                }
            }
            SysMatrix::Sparse(m) => {
                for (_, j, v) in m.triplets() {
                    col[j] += v.abs();
                }
            }
        }
        col.into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    /// `out += alpha * self * x`.
    pub fn gemm_acc(&self, alpha: T, x: &DMatrixView<T>, out: &mut DMatrixViewMut<T>) {
        match self {
            SysMatrix::Dense(m) => out.gemm(alpha, m, x, T::one()),
            SysMatrix::Sparse(m) => m.gemm_acc(alpha, x, out),
        }
    }

    pub fn mul(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.nrows(), x.ncols());
        self.gemm_acc(T::one(), &x.as_view(), &mut out.as_view_mut());
        out
    }

    /// `sum_i coeffs[i] * mats[i]`; sparse only when every term is sparse.
    pub fn linear_combination(mats: &[&SysMatrix<T>], coeffs: &[T]) -> Self {
        assert_eq!(mats.len(), coeffs.len());
        assert!(!mats.is_empty());
        let (r, c) = (mats[0].nrows(), mats[0].ncols());
        if mats.iter().all(|m| m.is_sparse()) {
            let mut trip = Vec::new();
            for (m, &a) in mats.iter().zip(coeffs) {
                if let SysMatrix::Sparse(s) = m {
                    if a != T::zero() {
                        trip.extend(s.triplets().map(|(i, j, v)| (i, j, a * v)));
                    }
                }
            }
            SysMatrix::Sparse(CsrMatrix::from_triplets(r, c, &trip))
        } else {
            let mut out = DMatrix::zeros(r, c);
            for (m, &a) in mats.iter().zip(coeffs) {
                match m {
                    SysMatrix::Dense(d) => out += d * a,
                    SysMatrix::Sparse(s) => {
                        for (i, j, v) in s.triplets() {
                            out[(i, j)] += a * v;
                        }
                    }
                }
            }
            SysMatrix::Dense(out)
        }
    }
}

impl<T: Real> From<DMatrix<T>> for SysMatrix<T> {
    fn from(m: DMatrix<T>) -> Self {
        SysMatrix::auto_dense(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_rule() {
        assert!(prefers_dense(5, 5, 1));
        assert!(prefers_dense(1000, 1000, 300_000));
        assert!(!prefers_dense(1000, 1000, 3000));
        let m = SysMatrix::<f64>::from_triplets(400, 400, &[(0, 0, 1.0), (3, 2, 2.0)]);
        assert!(m.is_sparse());
        assert_eq!(m.get(3, 2), 2.0);
        assert_eq!(m.norm1(), 2.0);
    }

    #[test]
    fn linear_combination_dense_and_sparse_agree() {
        let trip_a: Vec<_> = (0..300).map(|i| (i, i, 1.0 + i as f64)).collect();
        let trip_b: Vec<_> = (0..299).map(|i| (i, i + 1, -0.5)).collect();
        let a = SysMatrix::from_triplets(300, 300, &trip_a);
        let b = SysMatrix::from_triplets(300, 300, &trip_b);
        let s = SysMatrix::linear_combination(&[&a, &b], &[2.0, 3.0]);
        assert!(s.is_sparse());
        let d = SysMatrix::linear_combination(
            &[&SysMatrix::Dense(a.to_dense()), &b],
            &[2.0, 3.0],
        );
        assert!(!d.is_sparse());
        assert_eq!(s.to_dense(), d.to_dense());
        let x = DMatrix::from_fn(300, 2, |i, j| (i + j) as f64 * 0.01);
        assert!((s.mul(&x) - d.mul(&x)).norm() < 1e-12);
    }
}
