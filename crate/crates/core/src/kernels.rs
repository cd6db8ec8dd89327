//! Dense kernels: real Schur form, Bartels-Stewart for Lyapunov equations,
//! the matrix exponential, rank-revealing reduced QR and eigenvalues.

use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real Schur decomposition `A = Q T Q^T`.
#[derive(Clone, Debug)]
pub struct SchurForm<T: Real> {
    pub q: DMatrix<T>,
    pub t: DMatrix<T>,
}

impl<T: Real> SchurForm<T> {
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        let d = a.nrows();
        assert_eq!(d, a.ncols(), "Schur form of a non-square matrix");
        if !a.iter().all(|v| v.to_f64_lossy().is_finite()) {
            return Err(Error::NoConvergence { dim: d });
        }
        let schur = Schur::try_new(a.clone(), T::default_epsilon(), 100 * d.max(10))
            .ok_or(Error::NoConvergence { dim: d })?;
        let (q, t) = schur.unpack();
        Ok(SchurForm { q, t })
    }

    /// Sizes (1 or 2) of the diagonal blocks of `T`, top to bottom.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        diagonal_blocks(&self.t)
    }

    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.t.nrows());
        for (start, size) in self.blocks() {
            if size == 1 {
                out.push(Complex::new(self.t[(start, start)], T::zero()));
            } else {
                let (a, b) = (self.t[(start, start)], self.t[(start, start + 1)]);
                let (c, d) = (self.t[(start + 1, start)], self.t[(start + 1, start + 1)]);
                let half = T::of(0.5);
                let mean = (a + d) * half;
                let disc = ((a - d) * half).powi(2) + b * c;
                if disc >= T::zero() {
                    let s = disc.sqrt();
                    out.push(Complex::new(mean + s, T::zero()));
                    out.push(Complex::new(mean - s, T::zero()));
                } else {
                    let s = (-disc).sqrt();
                    out.push(Complex::new(mean, s));
                    out.push(Complex::new(mean, -s));
                }
            }
        }
        out
    }
}

fn diagonal_blocks<T: Real>(t: &DMatrix<T>) -> Vec<(usize, usize)> {
    let d = t.nrows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < d {
        if i + 1 < d && t[(i + 1, i)] != T::zero() {
            out.push((i, 2));
            i += 2;
        } else {
            out.push((i, 1));
            i += 1;
        }
    }
    out
}

/// Full spectrum of `a`.
pub fn eigenvalues<T: Real>(a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    Ok(SchurForm::new(a)?.eigenvalues())
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa<T: Real>(a: &DMatrix<T>) -> Result<T> {
    let ev = eigenvalues(a)?;
    Ok(ev.iter().map(|z| z.re).fold(T::min_value().unwrap(), |a, b| a.max(b)))
}

/// Solves the small Sylvester system `P X + X S = D` where `P` is `p x p`
/// and `S` is `q x q` with `p, q <= 2`, by Gaussian elimination on the
/// Kronecker form.
fn small_sylvester<T: Real>(
    p: &DMatrix<T>,
    s: &DMatrix<T>,
    d: &DMatrix<T>,
    scale: T,
) -> Result<DMatrix<T>> {
    let (pn, qn) = (p.nrows(), s.nrows());
    let m = pn * qn;
    let mut k = [[T::zero(); 5]; 4];
    // vec(X) ordered column-major: index = i + pn*j
    for j in 0..qn {
        for i in 0..pn {
            let row = i + pn * j;
            for l in 0..pn {
                k[row][l + pn * j] += p[(i, l)];
            }
            for l in 0..qn {
                k[row][i + pn * l] += s[(l, j)];
            }
            k[row][m] = d[(i, j)];
        }
    }
    let tiny = T::default_epsilon() * scale.max(T::of(f64::MIN_POSITIVE));
    for c in 0..m {
        let mut piv = c;
        for r in c + 1..m {
            if k[r][c].abs() > k[piv][c].abs() {
                piv = r;
            }
        }
        if k[piv][c].abs() <= tiny {
            return Err(Error::IllConditionedSpectrum);
        }
        k.swap(c, piv);
        for r in c + 1..m {
            let f = k[r][c] / k[c][c];
            if f != T::zero() {
                for cc in c..=m {
                    let v = k[c][cc];
                    k[r][cc] -= f * v;
                }
            }
        }
    }
    let mut x = [T::zero(); 4];
    for c in (0..m).rev() {
        let mut v = k[c][m];
        for cc in c + 1..m {
            v -= k[c][cc] * x[cc];
        }
        x[c] = v / k[c][c];
    }
    Ok(DMatrix::from_fn(pn, qn, |i, j| x[i + pn * j]))
}

/// Solves `T Y + Y T^T = C` for quasi-upper-triangular `T`, overwriting `C`.
fn triangular_lyapunov<T: Real>(t: &DMatrix<T>, c: &mut DMatrix<T>) -> Result<()> {
    let d = t.nrows();
    let blocks = diagonal_blocks(t);
    let scale = t.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    for (jb, &(j0, jw)) in blocks.iter().enumerate().rev() {
        let s = t.view((j0, j0), (jw, jw)).transpose();
        // Column block j: T Y_j + Y_j S = C_j, row blocks from the bottom.
        for &(i0, iw) in blocks[..].iter().rev() {
            let mut rhs = c.view((i0, j0), (iw, jw)).clone_owned();
            let tail = i0 + iw;
            if tail < d {
                rhs.gemm(
                    -T::one(),
                    &t.view((i0, tail), (iw, d - tail)),
                    &c.view((tail, j0), (d - tail, jw)),
                    T::one(),
                );
            }
            let p = t.view((i0, i0), (iw, iw)).clone_owned();
            let y = small_sylvester(&p, &s, &rhs, scale)?;
            c.view_mut((i0, j0), (iw, jw)).copy_from(&y);
        }
        if jb > 0 {
            // C_k -= Y_j T_{k,j}^T for the remaining column blocks k < j.
            let yj = c.view((0, j0), (d, jw)).clone_owned();
            let tkj = t.view((0, j0), (j0, jw)).clone_owned();
            let mut rest = c.view_mut((0, 0), (d, j0));
            rest.gemm(-T::one(), &yj, &tkj.transpose(), T::one());
        }
    }
    Ok(())
}

/// Solves `A X + X A^T + W = 0` by the Bartels-Stewart method on the real
/// Schur form of `A`. The result is symmetrized.
pub fn solve_lyapunov_dense<T: Real>(a: &DMatrix<T>, w: &DMatrix<T>) -> Result<DMatrix<T>> {
    let schur = SchurForm::new(a)?;
    solve_lyapunov_schur(&schur, w)
}

/// As [`solve_lyapunov_dense`] with a precomputed Schur form.
pub fn solve_lyapunov_schur<T: Real>(schur: &SchurForm<T>, w: &DMatrix<T>) -> Result<DMatrix<T>> {
    let q = &schur.q;
    let mut c = -(q.transpose() * w * q);
    triangular_lyapunov(&schur.t, &mut c)?;
    let x = q * c * q.transpose();
    Ok((&x + x.transpose()) * T::of(0.5))
}

/// Degree-13 Pade coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(A)` by scaling and squaring with the degree-13 diagonal Pade
/// approximant.
pub fn matrix_exponential<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let d = a.nrows();
    assert_eq!(d, a.ncols());
    if d == 0 {
        return a.clone();
    }
    let norm = (0..d)
        .map(|j| a.column(j).iter().fold(T::zero(), |s, v| s + v.abs()))
        .fold(T::zero(), |x, y| x.max(y))
        .to_f64_lossy();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * T::of(0.5f64.powi(s));
    let b: Vec<T> = PADE13.iter().map(|&c| T::of(c)).collect();
    let id = DMatrix::<T>::identity(d, d);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Pade denominator is nonsingular for scaled arguments");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Output of [`reduced_qr`].
#[derive(Clone, Debug)]
pub struct ReducedQr<T: Real> {
    /// Orthonormal columns, one per retained input column.
    pub q: DMatrix<T>,
    /// `c' x c` with `Q R = M`; nonnegative on the pivots of retained columns.
    pub r: DMatrix<T>,
    /// Indices of input columns dropped as numerically dependent.
    pub dropped: Vec<usize>,
}

/// Relative deflation threshold.
pub const DEFLATION_TOL: f64 = 1e-12;

/// Reduced QR of `m` with column deflation, by Gram-Schmidt with one
/// reorthogonalization pass per column.
pub fn reduced_qr<T: Real>(m: &DMatrix<T>) -> ReducedQr<T> {
    let norms: Vec<T> = m.column_iter().map(|c| c.norm()).collect();
    reduced_qr_with_reference(m, &norms)
}

/// As [`reduced_qr`], but column `j` is dropped when its orthogonalized norm
/// falls below `1e-12 * max(reference[j], eps * ||M||_F)`. Used when `m`
/// has already been orthogonalized against an outer basis and `reference`
/// holds the column norms from before that.
pub fn reduced_qr_with_reference<T: Real>(m: &DMatrix<T>, reference: &[T]) -> ReducedQr<T> {
    let (d, c) = m.shape();
    assert_eq!(reference.len(), c);
    let floor = T::default_epsilon() * m.norm();
    let mut q_cols: Vec<nalgebra::DVector<T>> = Vec::with_capacity(c);
    let mut r = DMatrix::<T>::zeros(c, c);
    let mut dropped = Vec::new();
    for j in 0..c {
        let mut v = m.column(j).clone_owned();
        for _pass in 0..2 {
            for (i, qi) in q_cols.iter().enumerate() {
                let h = qi.dot(&v);
                r[(i, j)] += h;
                v.axpy(-h, qi, T::one());
            }
        }
        let nv = v.norm();
        let thresh = T::tol(DEFLATION_TOL) * reference[j].max(floor);
        if nv <= thresh || nv == T::zero() {
            dropped.push(j);
        } else {
            let row = q_cols.len();
            r[(row, j)] = nv;
            q_cols.push(v / nv);
        }
    }
    let kept = q_cols.len();
    let q = if kept == 0 {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&q_cols)
    };
    ReducedQr {
        q,
        r: r.rows(0, kept).clone_owned(),
        dropped,
    }
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_norm2<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    let sym = (m + m.transpose()) * T::of(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .fold(T::zero(), |a, v| a.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn scalar_lyapunov() {
        let x = solve_lyapunov_dense(&DMatrix::from_element(1, 1, -1.0f64), &DMatrix::from_element(1, 1, 1.0))
            .unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_identity_lyapunov() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random(&mut rng, 6, 6);
        let w = &m + m.transpose();
        let x = solve_lyapunov_dense(&-DMatrix::identity(6, 6), &w).unwrap();
        assert!((x - &w * 0.5).norm() < 1e-13);
    }

    #[test]
    fn lyapunov_residual_random_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let d = 2 + trial * 2;
            let m = random(&mut rng, d, d);
            let shift = spectral_abscissa(&m).unwrap() + 0.5;
            let a = &m - DMatrix::identity(d, d) * shift;
            let b = random(&mut rng, d, 2);
            let w = &b * b.transpose();
            let x = solve_lyapunov_dense(&a, &w).unwrap();
            let res = &a * &x + &x * a.transpose() + &w;
            assert!(res.norm() <= 1e-10 * (a.norm() * x.norm() + w.norm()), "d={d}");
            assert_eq!(x, x.transpose());
        }
    }

    #[test]
    fn singular_spectrum_is_reported() {
        // eigenvalues 1 and -1 sum to zero
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(solve_lyapunov_dense(&a, &w), Err(Error::IllConditionedSpectrum)));
    }

    #[test]
    fn exponential_basics() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(matrix_exponential(&z), DMatrix::identity(4, 4));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0f64, 0.5, 7.0]));
        let e = matrix_exponential(&d);
        for i in 0..3 {
            assert!((e[(i, i)] / d[(i, i)].exp() - 1.0).abs() < 1e-13);
        }
        let n = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let e = matrix_exponential(&n);
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        assert!((e - expect).norm() < 1e-15);
    }

    #[test]
    fn exponential_of_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -30.0, 30.0, 0.0]);
        let e = matrix_exponential(&a);
        let expect = DMatrix::from_row_slice(2, 2, &[30f64.cos(), -30f64.sin(), 30f64.sin(), 30f64.cos()]);
        assert!((e - expect).norm() < 1e-11);
    }

    #[test]
    fn qr_deflates_dependent_columns() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let f = reduced_qr(&m);
        assert_eq!(f.q.ncols(), 1);
        assert_eq!(f.dropped, vec![1]);
        assert!((&f.q * &f.r - &m).norm() < 1e-14);
    }

    #[test]
    fn qr_sign_convention() {
        let f = reduced_qr(&DMatrix::from_element(1, 1, -2.0));
        assert_eq!(f.q[(0, 0)], -1.0);
        assert_eq!(f.r[(0, 0)], 2.0);
    }

    #[test]
    fn qr_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random(&mut rng, 20, 3);
        let f = reduced_qr(&m);
        assert!((&f.q * &f.r - &m).norm() <= 1e-12 * m.norm());
        assert!((f.q.transpose() * &f.q - DMatrix::identity(3, 3)).norm() <= 1e-12);
        for i in 0..3 {
            assert!(f.r[(i, i)] > 0.0);
        }
    }

    #[test]
    fn eigenvalues_of_companion_and_triangular() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = eigenvalues(&c).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - Complex::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex::new(0.0, 1.0)).norm() < 1e-14);
        let t = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, 2.0, 0.0, -2.0, 4.0, 0.0, 0.0, 3.0]);
        let mut re: Vec<f64> = eigenvalues(&t).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(re, vec![-2.0, 1.0, 3.0]);
    }
}
