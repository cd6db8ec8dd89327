//! Dense spectral discretization of the delay system.
//!
//! The history segment on `[-tau_m, 0]` is collocated on the Chebyshev
//! [`Mesh`]; the state of the resulting ODE stacks the `N + 1` nodal values,
//! the last block being the current state `x(t)`. This path materializes
//! everything and serves as a reference for the structured solver.

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::chebyshev::{Mesh, build_mesh, diff_matrix, lagrange_eval_weights};
use crate::error::{Error, Result};
use crate::kernels::{SchurForm, matrix_exponential, solve_lyapunov_schur};
use crate::model::DelaySystem;
use crate::scalar::Real;

/// Largest state dimension `(N+1) n` the dense reference accepts.
pub const DENSE_LIMIT: usize = 3000;
/// Largest state dimension for which `P_N(t)` is evaluated.
pub const EXPM_LIMIT: usize = 1000;
/// Relative Hurwitz margin on the spectral abscissa.
pub const HURWITZ_MARGIN: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DenseReference<T: Real> {
    pub mesh: Mesh<T>,
    /// State dimension of the delay system.
    pub n: usize,
    pub a_n: DMatrix<T>,
    pub b_n: DMatrix<T>,
    pub c_n: DMatrix<T>,
}

impl<T: Real> DenseReference<T> {
    /// The resolution `N`.
    pub fn resolution(&self) -> usize {
        self.mesh.n()
    }

    pub fn dim(&self) -> usize {
        self.a_n.nrows()
    }

    /// Selector of the last block, `e_{N+1} (x) I_n`.
    pub fn e_n(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut e = DMatrix::zeros(d, self.n);
        e.view_mut((d - self.n, 0), (self.n, self.n)).fill_with_identity();
        e
    }

    fn last_rows(&self, m: &DMatrix<T>) -> DMatrix<T> {
        m.rows(self.dim() - self.n, self.n).clone_owned()
    }
}

pub fn build_discretization<T: Real>(system: &DelaySystem<T>, n_res: usize) -> Result<DenseReference<T>> {
    if n_res == 0 {
        return Err(Error::InvalidArgument { arg: "N", reason: "must be at least 1".into() });
    }
    let n = system.n();
    let dim = (n_res + 1) * n;
    if dim > DENSE_LIMIT {
        return Err(Error::CapacityExceeded { dim, limit: DENSE_LIMIT });
    }
    let mesh = build_mesh(n_res, system.tau_max());
    let d = diff_matrix(&mesh);
    let mut a_n = DMatrix::zeros(dim, dim);
    for i in 0..n_res {
        for k in 0..=n_res {
            let v = d[(i, k)];
            for p in 0..n {
                a_n[(i * n + p, k * n + p)] = v;
            }
        }
    }
    let mut lw = vec![lagrange_eval_weights(&mesh, T::zero())];
    lw.extend(system.taus().iter().map(|&tau| lagrange_eval_weights(&mesh, -tau)));
    let dense_a: Vec<DMatrix<T>> = system.a().iter().map(|a| a.to_dense()).collect();
    let row0 = n_res * n;
    for k in 0..=n_res {
        let mut block = a_n.view_mut((row0, k * n), (n, n));
        for (ai, w) in dense_a.iter().zip(&lw) {
            if w[k] != T::zero() {
                block += ai * w[k];
            }
        }
    }
    let mut b_n = DMatrix::zeros(dim, system.r());
    b_n.view_mut((row0, 0), (n, system.r())).copy_from(system.b());
    let mut c_n = DMatrix::zeros(system.s(), dim);
    c_n.view_mut((0, row0), (system.s(), n)).copy_from(system.c());
    Ok(DenseReference { mesh, n, a_n, b_n, c_n })
}

/// Fails with `NotHurwitz` unless every eigenvalue of `a` lies left of
/// `-HURWITZ_MARGIN * ||a||`.
pub fn check_hurwitz<T: Real>(schur: &SchurForm<T>, a: &DMatrix<T>) -> Result<()> {
    let abscissa = schur
        .eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(T::min_value().unwrap(), |x, y| x.max(y));
    // a few ulps of the norm for types coarser than f64
    let margin = T::of(HURWITZ_MARGIN.max(64.0 * T::EPS_F64));
    if abscissa >= -margin * a.norm() {
        return Err(Error::NotHurwitz { abscissa: abscissa.to_f64_lossy() });
    }
    Ok(())
}

/// Solves `A_N P_N + P_N A_N^T + B_N B_N^T = 0`.
pub fn reference_lyapunov<T: Real>(r: &DenseReference<T>) -> Result<DMatrix<T>> {
    let schur = SchurForm::new(&r.a_n)?;
    check_hurwitz(&schur, &r.a_n)?;
    solve_lyapunov_schur(&schur, &(&r.b_n * r.b_n.transpose()))
}

/// `P_N(t) = E^T P_N exp(A_N^T t) E`.
pub fn reference_p_of_t<T: Real>(r: &DenseReference<T>, p_n: &DMatrix<T>, t: T) -> Result<DMatrix<T>> {
    if t < T::zero() {
        return Err(Error::InvalidArgument { arg: "t", reason: "must be nonnegative".into() });
    }
    let left = r.last_rows(p_n);
    if t == T::zero() {
        return Ok(left.columns(r.dim() - r.n, r.n).clone_owned());
    }
    if r.dim() > EXPM_LIMIT {
        return Err(Error::CapacityExceeded { dim: r.dim(), limit: EXPM_LIMIT });
    }
    let e = matrix_exponential(&(r.a_n.transpose() * t));
    Ok(left * e.columns(r.dim() - r.n, r.n))
}

/// `P_N(t_j)` on the uniform grid `t_j = j * t_max / (samples - 1)`, using
/// one matrix exponential for the step and repeated application.
pub fn reference_p_grid<T: Real>(
    r: &DenseReference<T>,
    p_n: &DMatrix<T>,
    t_max: T,
    samples: usize,
) -> Result<Vec<DMatrix<T>>> {
    if samples == 0 {
        return Ok(Vec::new());
    }
    if samples > 1 && r.dim() > EXPM_LIMIT {
        return Err(Error::CapacityExceeded { dim: r.dim(), limit: EXPM_LIMIT });
    }
    let left = r.last_rows(p_n);
    let mut cur = r.e_n();
    let mut out = vec![&left * &cur];
    if samples > 1 {
        let dt = t_max / T::of_usize(samples - 1);
        let step = matrix_exponential(&(r.a_n.transpose() * dt));
        for _ in 1..samples {
            cur = &step * cur;
            out.push(&left * &cur);
        }
    }
    Ok(out)
}

/// `H2` norm of the discretized system, `sqrt(tr(C P_N(0) C^T))`.
pub fn discretized_h2<T: Real>(r: &DenseReference<T>) -> Result<T> {
    let p = reference_lyapunov(r)?;
    discretized_h2_from(r, &p)
}

pub fn discretized_h2_from<T: Real>(r: &DenseReference<T>, p_n: &DMatrix<T>) -> Result<T> {
    let p0 = reference_p_of_t(r, p_n, T::zero())?;
    let c = &r.c_n.columns(r.dim() - r.n, r.n);
    Ok((c * p0 * c.transpose()).trace().max(T::zero()).sqrt())
}

fn complexify<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|v| Complex::new(v, T::zero()))
}

/// Solves `M X = rhs` for complex `M`, failing with `SingularShift` when
/// the LU pivots indicate numerical singularity.
fn shifted_solve<T: Real>(
    m: DMatrix<Complex<T>>,
    rhs: &DMatrix<Complex<T>>,
    s: Complex<T>,
) -> Result<DMatrix<Complex<T>>> {
    let err = || Error::SingularShift { re: s.re.to_f64_lossy(), im: s.im.to_f64_lossy() };
    let scale = m.iter().fold(T::zero(), |a, z| a.max(z.modulus()));
    let lu = m.lu();
    let u = lu.u();
    let pmin = u.diagonal().iter().fold(T::max_value().unwrap(), |a, z| a.min(z.modulus()));
    if !(pmin > T::tol(1e-14) * scale) {
        return Err(err());
    }
    let x = lu.solve(rhs).ok_or_else(err)?;
    if x.iter().any(|z| !z.re.to_f64_lossy().is_finite() || !z.im.to_f64_lossy().is_finite()) {
        return Err(err());
    }
    Ok(x)
}

/// `C (s I - A_0 - sum_i A_i e^{-s tau_i})^{-1} B`.
pub fn transfer_delay<T: Real>(system: &DelaySystem<T>, s: Complex<T>) -> Result<DMatrix<Complex<T>>> {
    let n = system.n();
    let mut m = DMatrix::from_diagonal_element(n, n, s);
    for (i, a) in system.a().iter().enumerate() {
        let w = if i == 0 { Complex::new(T::one(), T::zero()) } else { ComplexField::exp(-s * system.taus()[i - 1]) };
        match a {
            crate::linalg::SysMatrix::Dense(d) => {
                m -= complexify(d) * w;
            }
            crate::linalg::SysMatrix::Sparse(sp) => {
                for (r, c, v) in sp.triplets() {
                    m[(r, c)] -= w * v;
                }
            }
        }
    }
    let x = shifted_solve(m, &complexify(system.b()), s)?;
    Ok(complexify(system.c()) * x)
}

/// `C_N (s I - A_N)^{-1} B_N`.
pub fn transfer_discretized<T: Real>(r: &DenseReference<T>, s: Complex<T>) -> Result<DMatrix<Complex<T>>> {
    let d = r.dim();
    let m = DMatrix::from_diagonal_element(d, d, s) - complexify(&r.a_n);
    let x = shifted_solve(m, &complexify(&r.b_n), s)?;
    Ok(complexify(&r.c_n) * x)
}

/// Eigenvalues of `A_N`, sorted by decreasing real part.
pub fn discretized_roots<T: Real>(r: &DenseReference<T>) -> Result<Vec<Complex<T>>> {
    let mut ev = SchurForm::new(&r.a_n)?.eigenvalues();
    sort_by_real_desc(&mut ev);
    Ok(ev)
}

/// Sorts by decreasing real part, then by decreasing imaginary part.
pub fn sort_by_real_desc<T: Real>(v: &mut [Complex<T>]) {
    v.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}
