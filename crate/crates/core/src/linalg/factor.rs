use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, LU, Dyn};

use super::{BandLu, CsrMatrix, SysMatrix, reverse_cuthill_mckee};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Condition estimates above this reject the factorization.
pub const MAX_CONDITION: f64 = 1e14;

enum Kind<T: Real> {
    Dense(LU<T, Dyn, Dyn>),
    Band(BandLu<T>),
}

/// Reusable LU factorization of a square system matrix.
///
/// Sparse inputs are reordered with reverse Cuthill-McKee and factored in
/// band form when the resulting band is narrow; otherwise the dense LU of
/// nalgebra is used. Every call to [`LuFactor::solve`] is counted.
pub struct LuFactor<T: Real> {
    kind: Kind<T>,
    n: usize,
    cond: T,
    solves: AtomicUsize,
}

impl<T: Real> std::fmt::Debug for LuFactor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor")
            .field("n", &self.n)
            .field("banded", &matches!(self.kind, Kind::Band(_)))
            .field("cond", &self.cond)
            .field("solves", &self.solve_count())
            .finish()
    }
}

impl<T: Real> LuFactor<T> {
    /// Factors `m`, failing with `SingularR0` when the 1-norm condition
    /// estimate exceeds [`MAX_CONDITION`].
    pub fn new(m: &SysMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "LU of a non-square matrix");
        let norm = m.norm1();
        let kind = match m {
            SysMatrix::Sparse(s) => Self::try_band(s).map(Kind::Band),
            SysMatrix::Dense(_) => None,
        }
        .unwrap_or_else(|| Kind::Dense(LU::new(m.to_dense())));

        let singular = || Error::SingularR0 { cond: f64::INFINITY };
        let inv_norm = match &kind {
            Kind::Dense(lu) => {
                let inv = lu.try_inverse().ok_or_else(singular)?;
                SysMatrix::Dense(inv).norm1()
            }
            Kind::Band(b) => {
                let (lo, _) = b.pivot_range();
                if lo == T::zero() {
                    return Err(singular());
                }
                estimate_inverse_norm1(n, |x| b.solve(x), |x| b.solve_transpose(x))
            }
        };
        let cond = norm * inv_norm;
        let c = cond.to_f64_lossy();
        if !c.is_finite() || c > MAX_CONDITION {
            return Err(Error::SingularR0 { cond: c });
        }
        Ok(LuFactor {
            kind,
            n,
            cond,
            solves: AtomicUsize::new(0),
        })
    }

    fn try_band(s: &CsrMatrix<T>) -> Option<BandLu<T>> {
        let n = s.nrows();
        let perm = reverse_cuthill_mckee(s);
        let (kl, ku) = BandLu::bandwidths(s, &perm);
        if (2 * kl + ku + 1) * 8 > n {
            return None;
        }
        BandLu::factor(s, perm)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.kind, Kind::Band(_))
    }

    /// 1-norm condition estimate computed at factorization time.
    pub fn condition(&self) -> T {
        self.cond
    }

    /// Number of solves performed so far (one per call, whatever the
    /// number of right-hand sides).
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.solve_uncounted(b)
    }

    fn solve_uncounted(&self, b: &DMatrix<T>) -> DMatrix<T> {
        match &self.kind {
            Kind::Dense(lu) => lu.solve(b).expect("factor checked nonsingular"),
            Kind::Band(f) => f.solve(b),
        }
    }
}

/// Estimates `||A^{-1}||_1` from solves with `A` and `A^T` (Hager's method
/// with Higham's refinements, limited to five sweeps).
pub fn estimate_inverse_norm1<T: Real>(
    n: usize,
    solve: impl Fn(&DMatrix<T>) -> DMatrix<T>,
    solve_t: impl Fn(&DMatrix<T>) -> DMatrix<T>,
) -> T {
    if n == 0 {
        return T::zero();
    }
    let mut x = DMatrix::from_element(n, 1, T::one() / T::of_usize(n));
    let mut est = T::zero();
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x);
        est = y.iter().fold(T::zero(), |s, v| s + v.abs());
        let xi = y.map(|v| if v >= T::zero() { T::one() } else { -T::one() });
        let z = solve_t(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bj, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bj, bv) });
        if zmax <= z.dot(&x) || j == last_j {
            break;
        }
        last_j = j;
        x.fill(T::zero());
        x[j] = T::one();
    }
    // Higham's alternating-sign test vector guards against bad local maxima.
    let alt = DMatrix::from_fn(n, 1, |i, _| {
        let s = if i % 2 == 0 { T::one() } else { -T::one() };
        s * (T::one() + T::of_usize(i) / T::of_usize((n - 1).max(1)))
    });
    let w = solve(&alt);
    let alt_est = T::of(2.0) * w.iter().fold(T::zero(), |s, v| s + v.abs()) / T::of_usize(3 * n);
    est.max(alt_est)
}

/// Exact 1-norm condition number of a small dense matrix.
pub fn one_norm_condition<T: Real>(m: &DMatrix<T>) -> Option<T> {
    let inv = m.clone().try_inverse()?;
    let a = SysMatrix::Dense(m.clone()).norm1();
    Some(a * SysMatrix::Dense(inv).norm1())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_band_paths_agree() {
        let n = 400;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + (i % 7) as f64));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.5));
            }
            trip.push((i, n - 1 - i, 0.5));
        }
        let s = SysMatrix::from_triplets(n, n, &trip);
        assert!(s.is_sparse());
        let band = LuFactor::new(&s).unwrap();
        assert!(band.is_banded());
        let dense = LuFactor::new(&SysMatrix::Dense(s.to_dense())).unwrap();
        let b = DMatrix::from_fn(n, 2, |i, j| ((i * 3 + j) % 11) as f64 - 5.0);
        let x1 = band.solve(&b);
        let x2 = dense.solve(&b);
        assert!((&x1 - &x2).norm() < 1e-11 * x2.norm());
        assert_eq!(band.solve_count(), 1);
        let ratio = band.condition() / dense.condition();
        assert!(ratio > 0.1 && ratio <= 1.0 + 1e-12, "ratio {ratio}");
    }

    #[test]
    fn singular_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            LuFactor::new(&SysMatrix::Dense(m)),
            Err(Error::SingularR0 { .. })
        ));
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-16]);
        assert!(LuFactor::new(&SysMatrix::Dense(near)).is_err());
    }

    #[test]
    fn exact_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0f64, 0.0, 0.0, 0.5]);
        assert!((one_norm_condition(&m).unwrap() - 4.0).abs() < 1e-14);
    }
}
