//! Low-rank approximation of the delay Lyapunov matrix from the Krylov
//! projection, with the projected H2 norm, reduced transfer function and
//! characteristic root estimates.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::arnoldi::{ArnoldiState, arnoldi_init};
use crate::discretization::sort_by_real_desc;
use crate::error::{Error, Result};
use crate::kernels::{SchurForm, matrix_exponential, solve_lyapunov_schur, symmetric_norm2};
use crate::model::DelaySystem;
use crate::pencil::PencilContext;
use crate::scalar::Real;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_K: usize = 200;
/// Block steps added between residual checks in adaptive mode.
pub const K_INCREMENT: usize = 5;

#[derive(Clone, Debug)]
pub struct SolveOptions<T: Real> {
    /// Fixed projection size; when `None` the size grows until the
    /// residual test passes.
    pub k: Option<usize>,
    /// Relative residual threshold against `||H_k H_k^T||_2`.
    pub residual_tol: T,
    pub max_k: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            k: None,
            residual_tol: T::of(DEFAULT_RESIDUAL_TOL),
            max_k: DEFAULT_MAX_K,
        }
    }
}

impl<T: Real> SolveOptions<T> {
    pub fn fixed(k: usize) -> Self {
        SolveOptions { k: Some(k), ..Default::default() }
    }

    fn check(&self) -> Result<()> {
        if let Some(k) = self.k {
            if k == 0 {
                return Err(Error::InvalidArgument { arg: "k", reason: "must be at least 1".into() });
            }
        }
        if !(self.residual_tol > T::zero()) {
            return Err(Error::InvalidArgument { arg: "residual_tol", reason: "must be positive".into() });
        }
        if self.max_k == 0 {
            return Err(Error::InvalidArgument { arg: "max_k", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// Everything needed to evaluate `P_k(t)` and the projected H2 norm.
#[derive(Clone, Debug)]
pub struct LyapApprox<T: Real> {
    pub k: usize,
    /// `[R_0 ... R_{2k-1}] V_{2k}`, `n x offset(2k)`.
    pub l: DMatrix<T>,
    /// Number of leading columns of `l` that belong to `V_k`.
    pub kr: usize,
    pub qk: DMatrix<T>,
    pub gk: DMatrix<T>,
    pub g2k: DMatrix<T>,
    pub hk: DMatrix<T>,
    /// `C L[:, :kr]`.
    pub fk: DMatrix<T>,
    pub residual_norm: T,
    /// `||H_k H_k^T||_2`, the scale of the residual test.
    pub residual_scale: T,
    pub stable: bool,
    /// `(k, relative residual)` for every size tried.
    pub history: Vec<(usize, T)>,
    g2k_inv_t: Option<DMatrix<T>>,
}

/// Reciprocal eigenvalues of `G_k`, i.e. characteristic root estimates,
/// sorted by decreasing real part.
pub fn roots_of_projection<T: Real>(gk: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let ev = SchurForm::new(gk)?.eigenvalues();
    let mut roots: Vec<Complex<T>> = ev
        .into_iter()
        .filter(|z| z.re != T::zero() || z.im != T::zero())
        .map(|z| Complex::new(T::one(), T::zero()) / z)
        .collect();
    sort_by_real_desc(&mut roots);
    Ok(roots)
}

/// Spectral norm of
/// `Hbar_k [Q 0] + [Q; 0] Hbar_k^T + [H_k; 0][H_k^T 0]`.
pub fn lyap_residual_norm<T: Real>(state: &ArnoldiState<T>, k: usize, qk: &DMatrix<T>, hk: &DMatrix<T>) -> T {
    let hr = state.h_rect(k);
    let (rows, cols) = hr.shape();
    let mut q0 = DMatrix::zeros(cols, rows);
    q0.columns_mut(0, cols).copy_from(qk);
    let hq = &hr * &q0;
    let mut m = &hq + hq.transpose();
    let mut hpad = DMatrix::zeros(rows, hk.ncols());
    hpad.rows_mut(0, cols).copy_from(hk);
    m += &hpad * hpad.transpose();
    symmetric_norm2(&m)
}

impl<T: Real> LyapApprox<T> {
    /// Builds the approximation of size `k` from a state with at least
    /// `2k` completed steps.
    pub fn from_state(state: &ArnoldiState<T>, k: usize) -> Result<Self> {
        assert!(k >= 1, "projection size must be positive");
        assert!(state.k() >= 2 * k, "state has {} steps, need {}", state.k(), 2 * k);
        let gk = state.h_square(k);
        let g2k = state.h_square(2 * k);
        let kr = state.offset(k);
        let hk = state.projected_h(k);
        let schur = SchurForm::new(&gk)?;
        let ev = schur.eigenvalues();
        let bad: Vec<&Complex<T>> = ev.iter().filter(|z| z.re >= T::zero()).collect();
        if !bad.is_empty() {
            let worst = bad
                .iter()
                .map(|z| {
                    if z.re == T::zero() && z.im == T::zero() {
                        Complex::new(T::max_value().unwrap(), T::zero())
                    } else {
                        Complex::new(T::one(), T::zero()) / **z
                    }
                })
                .fold(None, |acc: Option<Complex<T>>, z| match acc {
                    Some(a) if a.re >= z.re => Some(a),
                    _ => Some(z),
                })
                .unwrap();
            return Err(Error::ProjectedUnstable {
                count: bad.len(),
                re: worst.re.to_f64_lossy(),
                im: worst.im.to_f64_lossy(),
            });
        }
        let qk = solve_lyapunov_schur(&schur, &(&hk * hk.transpose()))?;
        let residual_norm = lyap_residual_norm(state, k, &qk, &hk);
        let residual_scale = symmetric_norm2(&(&hk * hk.transpose()));
        let ctx = state.ctx();
        let n = state.n();
        let mut l = DMatrix::zeros(n, state.offset(2 * k));
        for j in 0..2 * k {
            let vj = state.basis_column(j);
            if vj.ncols() > 0 {
                l.columns_mut(state.offset(j), vj.ncols()).copy_from(&ctx.apply_f(vj, j + 1));
            }
        }
        let fk = ctx.system().c() * l.columns(0, kr);
        let g2k_inv_t = g2k.clone().try_inverse().map(|m| m.transpose());
        let rel = if residual_scale > T::zero() { residual_norm / residual_scale } else { residual_norm };
        Ok(LyapApprox {
            k,
            l,
            kr,
            qk,
            gk,
            g2k,
            hk,
            fk,
            residual_norm,
            residual_scale,
            stable: true,
            history: vec![(k, rel)],
            g2k_inv_t,
        })
    }

    pub fn relative_residual(&self) -> T {
        if self.residual_scale > T::zero() {
            self.residual_norm / self.residual_scale
        } else {
            self.residual_norm
        }
    }

    /// `L[:, :kr]`.
    pub fn left_factor(&self) -> DMatrix<T> {
        self.l.columns(0, self.kr).clone_owned()
    }

    /// `P_k(t) = L_1 Q_k [I 0] exp(t G_2k^{-T}) L^T` for `t >= 0`.
    pub fn eval_p(&self, t: T) -> Result<DMatrix<T>> {
        if t < T::zero() {
            return Err(Error::InvalidArgument {
                arg: "t",
                reason: "must be nonnegative; use P(-t) = P(t)^T".into(),
            });
        }
        let l1q = self.left_factor() * &self.qk;
        if t == T::zero() {
            let l1 = self.left_factor();
            return Ok(&l1q * l1.transpose());
        }
        let ginv = self.g2k_inv_t.as_ref().ok_or(Error::SingularProjection)?;
        let e = matrix_exponential(&(ginv * t));
        let right = e.rows(0, self.kr) * self.l.transpose();
        Ok(l1q * right)
    }

    /// `P_k(t_j)` for `t_j = j t_max / (samples - 1)`, with one matrix
    /// exponential for the step.
    pub fn eval_p_grid(&self, t_max: T, samples: usize) -> Result<Vec<DMatrix<T>>> {
        if samples == 0 {
            return Ok(Vec::new());
        }
        if t_max < T::zero() {
            return Err(Error::InvalidArgument { arg: "t_max", reason: "must be nonnegative".into() });
        }
        let mut out = vec![self.eval_p(T::zero())?];
        if samples == 1 {
            return Ok(out);
        }
        let ginv = self.g2k_inv_t.as_ref().ok_or(Error::SingularProjection)?;
        let dt = t_max / T::of_usize(samples - 1);
        let step = matrix_exponential(&(ginv * dt));
        let l1q = self.left_factor() * &self.qk;
        let lt = self.l.transpose();
        let d = self.g2k.nrows();
        let mut m = DMatrix::<T>::identity(d, d).rows(0, self.kr).clone_owned();
        for _ in 1..samples {
            m *= &step;
            out.push(&l1q * (&m * &lt));
        }
        Ok(out)
    }

    /// `sqrt(tr(F_k Q_k F_k^T))`.
    pub fn h2_norm(&self) -> T {
        (&self.fk * &self.qk * self.fk.transpose()).trace().max(T::zero()).sqrt()
    }

    /// `F_k (s G_k - I)^{-1} H_k`.
    pub fn reduced_transfer(&self, s: Complex<T>) -> Result<DMatrix<Complex<T>>> {
        reduced_transfer_parts(&self.fk, &self.gk, &self.hk, s)
    }

    /// Derivatives `0..count` of the reduced transfer function at zero:
    /// `-i! F_k G_k^i H_k`.
    pub fn moments(&self, count: usize) -> Vec<DMatrix<T>> {
        let mut out = Vec::with_capacity(count);
        let mut gh = self.hk.clone();
        let mut fact = T::one();
        for i in 0..count {
            if i > 0 {
                gh = &self.gk * gh;
                fact *= T::of_usize(i);
            }
            out.push(&self.fk * &gh * (-fact));
        }
        out
    }

    pub fn roots(&self) -> Result<Vec<Complex<T>>> {
        roots_of_projection(&self.gk)
    }
}

pub fn reduced_transfer_parts<T: Real>(
    f: &DMatrix<T>,
    g: &DMatrix<T>,
    h: &DMatrix<T>,
    s: Complex<T>,
) -> Result<DMatrix<Complex<T>>> {
    let d = g.nrows();
    let cplx = |m: &DMatrix<T>| m.map(|v| Complex::new(v, T::zero()));
    let m = cplx(g) * s - DMatrix::identity(d, d);
    let scale = m.iter().fold(T::zero(), |a, z| a.max(z.modulus()));
    let err = || Error::SingularShift { re: s.re.to_f64_lossy(), im: s.im.to_f64_lossy() };
    let lu = m.lu();
    let pmin = lu.u().diagonal().iter().fold(T::max_value().unwrap(), |a, z| a.min(z.modulus()));
    if !(pmin > T::tol(1e-14) * scale) {
        return Err(err());
    }
    let x = lu.solve(&cplx(h)).ok_or_else(err)?;
    Ok(cplx(f) * x)
}

/// Characteristic root estimates from the current projection.
#[derive(Clone, Debug)]
pub struct RootEstimate<T: Real> {
    pub roots: Vec<Complex<T>>,
    /// Every estimate has negative real part.
    pub stable: bool,
}

pub fn characteristic_roots<T: Real>(state: &ArnoldiState<T>, count: usize) -> Result<RootEstimate<T>> {
    let all = roots_of_projection(&state.h_square(state.k()))?;
    let stable = all.iter().all(|z| z.re < T::zero());
    Ok(RootEstimate { roots: all.into_iter().take(count).collect(), stable })
}

/// Wall-clock time spent per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    /// Factorization of `R_0` and the start block.
    pub factorization: Duration,
    pub arnoldi: Duration,
    /// Projected Lyapunov solves, residuals and left factors.
    pub projection: Duration,
}

/// Keeps an Arnoldi state alive so approximations of increasing size can
/// be extracted without repeating work.
#[derive(Debug)]
pub struct KrylovLyap<T: Real> {
    state: ArnoldiState<T>,
    timings: Timings,
}

impl<T: Real> KrylovLyap<T> {
    pub fn new(system: &DelaySystem<T>) -> Result<Self> {
        let start = Instant::now();
        let ctx = Arc::new(PencilContext::new(system)?);
        let state = arnoldi_init(ctx)?;
        let timings = Timings { factorization: start.elapsed(), ..Timings::default() };
        Ok(KrylovLyap { state, timings })
    }

    pub fn state(&self) -> &ArnoldiState<T> {
        &self.state
    }

    pub fn timings(&self) -> Timings {
        self.timings
    }

    pub fn ensure_steps(&mut self, steps: usize) -> &ArnoldiState<T> {
        let start = Instant::now();
        self.state.run_to(steps);
        self.timings.arnoldi += start.elapsed();
        &self.state
    }

    pub fn approx(&mut self, k: usize) -> Result<LyapApprox<T>> {
        self.ensure_steps(2 * k);
        let start = Instant::now();
        let a = LyapApprox::from_state(&self.state, k);
        self.timings.projection += start.elapsed();
        a
    }

    pub fn roots(&mut self, k: usize, count: usize) -> Result<RootEstimate<T>> {
        self.ensure_steps(k);
        let all = roots_of_projection(&self.state.h_square(k))?;
        let stable = all.iter().all(|z| z.re < T::zero());
        Ok(RootEstimate { roots: all.into_iter().take(count).collect(), stable })
    }

    pub fn solve(&mut self, opts: &SolveOptions<T>) -> Result<LyapApprox<T>> {
        opts.check()?;
        if let Some(k) = opts.k {
            return self.approx(k);
        }
        let mut history = Vec::new();
        let mut k = K_INCREMENT.min(opts.max_k);
        loop {
            let mut a = self.approx(k)?;
            let rel = a.relative_residual();
            history.push((k, rel));
            if rel <= opts.residual_tol {
                a.history = history;
                return Ok(a);
            }
            if k >= opts.max_k {
                return Err(Error::BudgetExhausted {
                    k,
                    residual: rel.to_f64_lossy(),
                    tol: opts.residual_tol.to_f64_lossy(),
                });
            }
            k = (k + K_INCREMENT).min(opts.max_k);
        }
    }
}

/// Runs the projection on `system` per `opts`.
pub fn low_rank_delay_lyapunov<T: Real>(system: &DelaySystem<T>, opts: &SolveOptions<T>) -> Result<LyapApprox<T>> {
    KrylovLyap::new(system)?.solve(opts)
}
