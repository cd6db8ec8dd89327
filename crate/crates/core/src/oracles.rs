//! Brute-force references used to validate the spectral and Krylov paths:
//! fixed-step integration of the fundamental solution, quadrature of the
//! integral defining `P(t)`, and frequency-domain quadrature of the H2 norm.

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::discretization::transfer_delay;
use crate::error::{Error, Result};
use crate::model::DelaySystem;
use crate::scalar::Real;

/// Relative tolerance for a delay or time to count as a grid multiple.
const GRID_TOL: f64 = 1e-9;
/// `K` must have decayed to this fraction of its peak over the last
/// `tau_max` of the horizon.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Recursion limit of the adaptive Simpson rule on each panel.
const MAX_DEPTH: usize = 24;

/// `K(j h)` for `j = 0..=T/h`.
#[derive(Clone, Debug)]
pub struct FundamentalSolution<T: Real> {
    step: T,
    samples: Vec<DMatrix<T>>,
    /// Largest delay in grid steps.
    max_lag: usize,
    /// Every delay is a multiple of `2h`, so Richardson extrapolation with
    /// the every-other-sample rule sees the same breakpoints.
    even_lags: bool,
}

impl<T: Real> FundamentalSolution<T> {
    pub fn step(&self) -> T {
        self.step
    }

    pub fn horizon(&self) -> T {
        self.step * T::of_usize(self.samples.len() - 1)
    }

    pub fn samples(&self) -> &[DMatrix<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at(&self, j: usize) -> &DMatrix<T> {
        &self.samples[j]
    }
}

fn grid_index<T: Real>(x: T, h: T) -> Option<usize> {
    let r = (x / h).to_f64_lossy();
    let k = r.round();
    if k >= 0.0 && (r - k).abs() <= GRID_TOL * k.max(1.0) {
        Some(k as usize)
    } else {
        None
    }
}

/// Index of `K(t_j - d h)`, or `None` where it vanishes; the left limit at
/// zero is zero.
fn lagged(j: usize, d: usize, left: bool) -> Option<usize> {
    if j < d || (left && j == d) { None } else { Some(j - d) }
}

fn rhs<T: Real>(a: &[DMatrix<T>], x: &DMatrix<T>, delayed: &[Option<&DMatrix<T>>]) -> DMatrix<T> {
    let mut out = &a[0] * x;
    for (i, m) in delayed.iter().enumerate() {
        if let Some(m) = m {
            out.gemm(T::one(), &a[i + 1], *m, T::one());
        }
    }
    out
}

fn derivative<T: Real>(a: &[DMatrix<T>], lags: &[usize], k: &[DMatrix<T>], j: usize, left: bool) -> DMatrix<T> {
    let delayed: Vec<Option<&DMatrix<T>>> = lags.iter().map(|&d| lagged(j, d, left).map(|i| &k[i])).collect();
    rhs(a, &k[j], &delayed)
}

/// Classical RK4 on `K' = A_0 K + sum_i A_i K(t - tau_i)`, `K(0) = I`,
/// `K = 0` before zero. Every delay must be a multiple of `h` and at least
/// `10 h`; delayed values at half steps come from cubic Hermite
/// interpolation of the stored history, with one-sided derivatives so that
/// the jump at zero and the kinks it propagates sit on grid points.
pub fn integrate_fundamental<T: Real>(system: &DelaySystem<T>, h: T, horizon: T) -> Result<FundamentalSolution<T>> {
    if !(h > T::zero()) || !(horizon >= T::zero()) {
        return Err(Error::InvalidArgument { arg: "h", reason: "step and horizon must be positive".into() });
    }
    let mismatch = |tau: T| Error::GridMismatch { tau: tau.to_f64_lossy(), step: h.to_f64_lossy() };
    let mut lags = Vec::with_capacity(system.m());
    for &tau in system.taus() {
        let d = grid_index(tau, h).ok_or_else(|| mismatch(tau))?;
        if d < 10 {
            return Err(mismatch(tau));
        }
        lags.push(d);
    }
    let steps = grid_index(horizon, h).unwrap_or_else(|| (horizon / h).to_f64_lossy().ceil() as usize);
    let n = system.n();
    let a: Vec<DMatrix<T>> = system.a().iter().map(|m| m.to_dense()).collect();

    let mut k = vec![DMatrix::<T>::identity(n, n)];
    // one-sided derivatives at each grid point
    let mut d_left = vec![DMatrix::zeros(n, n)];
    let mut d_right = vec![derivative(&a, &lags, &k, 0, false)];

    let half = h * T::of(0.5);
    let eighth = h * T::of(0.125);
    for j in 0..steps {
        // delayed values at t_j (right limit), t_j + h/2, t_j + h (left limit)
        let start: Vec<Option<&DMatrix<T>>> = lags.iter().map(|&d| lagged(j, d, false).map(|i| &k[i])).collect();
        let end: Vec<Option<&DMatrix<T>>> = lags.iter().map(|&d| lagged(j + 1, d, true).map(|i| &k[i])).collect();
        let mid_owned: Vec<Option<DMatrix<T>>> = lags
            .iter()
            .map(|&d| {
                // Hermite midpoint on [t_{j-d}, t_{j-d+1}]
                (j >= d).then(|| {
                    let i = j - d;
                    (&k[i] + &k[i + 1]) * T::of(0.5) + (&d_right[i] - &d_left[i + 1]) * eighth
                })
            })
            .collect();
        let mid: Vec<Option<&DMatrix<T>>> = mid_owned.iter().map(Option::as_ref).collect();
        let y = &k[j];
        let k1 = rhs(&a, y, &start);
        let k2 = rhs(&a, &(y + &k1 * half), &mid);
        let k3 = rhs(&a, &(y + &k2 * half), &mid);
        let k4 = rhs(&a, &(y + &k3 * h), &end);
        let next = y + (k1 + (k2 + k3) * T::of(2.0) + k4) * (h / T::of(6.0));
        k.push(next);
        d_left.push(derivative(&a, &lags, &k, j + 1, true));
        d_right.push(derivative(&a, &lags, &k, j + 1, false));
    }
    Ok(FundamentalSolution {
        step: h,
        samples: k,
        max_lag: lags.iter().copied().max().unwrap_or(0),
        even_lags: lags.iter().all(|d| d % 2 == 0),
    })
}

/// Composite trapezoid over samples `0..len` of `f`, optionally with one
/// Richardson step against the rule on every other sample.
fn trapezoid_richardson<T: Real>(len: usize, h: T, richardson: bool, f: impl Fn(usize) -> DMatrix<T>) -> DMatrix<T> {
    assert!(len >= 2);
    let vals: Vec<DMatrix<T>> = (0..len).map(&f).collect();
    let fine = trapezoid(&vals, 1, h);
    if richardson && (len - 1).is_multiple_of(2) && len >= 3 {
        let coarse = trapezoid(&vals, 2, h * T::of(2.0));
        (fine * T::of(4.0) - coarse) / T::of(3.0)
    } else {
        fine
    }
}

fn trapezoid<T: Real>(vals: &[DMatrix<T>], stride: usize, h: T) -> DMatrix<T> {
    let last = vals.len() - 1;
    let mut acc = (&vals[0] + &vals[last]) * T::of(0.5);
    let mut i = stride;
    while i < last {
        acc += &vals[i];
        i += stride;
    }
    acc * h
}

impl<T: Real> FundamentalSolution<T> {
    /// Fails with `HorizonTooShort` unless `||K||` has dropped below
    /// `TRUNCATION_TOL` of its peak over the last `max(tau_max, 1)` of
    /// the horizon.
    pub fn check_truncation(&self) -> Result<()> {
        let norms: Vec<T> = self.samples.iter().map(|m| m.norm()).collect();
        let peak = norms.iter().fold(T::zero(), |a, &b| a.max(b));
        let window = self.max_lag.max(grid_index(T::one(), self.step).unwrap_or(1)).min(norms.len());
        let tail = norms[norms.len() - window..].iter().fold(T::zero(), |a, &b| a.max(b));
        let bound = peak * T::of(TRUNCATION_TOL);
        if tail > bound {
            return Err(Error::HorizonTooShort { tail: tail.to_f64_lossy(), bound: bound.to_f64_lossy() });
        }
        Ok(())
    }
}

/// `P(t) = int_0^T K(s) B B^T K(s + t)^T ds` by trapezoidal quadrature on the
/// stored grid, with Richardson extrapolation when every breakpoint is on
/// the coarse grid too. `t` must be a grid multiple.
pub fn delay_lyapunov_quadrature<T: Real>(ks: &FundamentalSolution<T>, b: &DMatrix<T>, t: T) -> Result<DMatrix<T>> {
    ks.check_truncation()?;
    lyapunov_quadrature_unchecked(ks, b, t)
}

fn lyapunov_quadrature_unchecked<T: Real>(ks: &FundamentalSolution<T>, b: &DMatrix<T>, t: T) -> Result<DMatrix<T>> {
    let h = ks.step;
    let shift = grid_index(t, h).ok_or(Error::GridMismatch { tau: t.to_f64_lossy(), step: h.to_f64_lossy() })?;
    if shift + 2 > ks.len() {
        return Err(Error::InvalidArgument { arg: "t", reason: "beyond the integration horizon".into() });
    }
    let len = ks.len() - shift;
    let kb: Vec<DMatrix<T>> = ks.samples.iter().map(|k| k * b).collect();
    let richardson = ks.even_lags && shift % 2 == 0;
    Ok(trapezoid_richardson(len, h, richardson, |s| &kb[s] * kb[s + shift].transpose()))
}

/// `P(t_j)` for each grid-aligned `t_j`, after one truncation check.
pub fn delay_lyapunov_quadrature_grid<T: Real>(
    ks: &FundamentalSolution<T>,
    b: &DMatrix<T>,
    times: &[T],
) -> Result<Vec<DMatrix<T>>> {
    ks.check_truncation()?;
    times.iter().map(|&t| lyapunov_quadrature_unchecked(ks, b, t)).collect()
}

/// `sqrt(int_0^T tr(h(t)^T h(t)) dt)` with the impulse response
/// `h = C K B`.
pub fn h2_time_domain<T: Real>(ks: &FundamentalSolution<T>, b: &DMatrix<T>, c: &DMatrix<T>) -> Result<T> {
    ks.check_truncation()?;
    let resp: Vec<DMatrix<T>> = ks.samples.iter().map(|k| c * k * b).collect();
    let energy = trapezoid_richardson(ks.len(), ks.step, ks.even_lags, |j| {
        DMatrix::from_element(1, 1, resp[j].norm_squared())
    });
    Ok(energy[(0, 0)].max(T::zero()).sqrt())
}

/// `||Upsilon||_2` from `(1/pi) int_0^inf ||Upsilon(i w)||_F^2 dw`, split
/// into `points` uniform panels on `[0, omega_max]` each integrated by
/// adaptive Simpson, plus the tail `||CB||_F^2 / omega_max` of the
/// `1/w^2` decay.
pub fn h2_quadrature<T: Real>(system: &DelaySystem<T>, omega_max: T, points: usize) -> Result<T> {
    if !(omega_max > T::zero()) || points == 0 {
        return Err(Error::InvalidArgument { arg: "omega_max", reason: "need a positive cutoff and at least one panel".into() });
    }
    let f = |w: T| -> Result<T> {
        let g = transfer_delay(system, Complex::new(T::zero(), w))?;
        Ok(g.iter().fold(T::zero(), |a, z| a + z.modulus_squared()))
    };
    let scale = f(T::zero())?.max(T::of(1e-300));
    let width = omega_max / T::of_usize(points);
    let mut total = T::zero();
    for p in 0..points {
        let a = width * T::of_usize(p);
        let b = a + width;
        let (fa, fm, fb) = (f(a)?, f((a + b) * T::of(0.5))?, f(b)?);
        let tol = T::of(1e-12) * scale * width;
        total += adaptive_simpson(&f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, MAX_DEPTH)?;
    }
    let cb = (system.c() * system.b()).norm_squared();
    let tail = cb / omega_max;
    Ok(((total + tail) / T::pi()).max(T::zero()).sqrt())
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<T: Real>(
    f: &impl Fn(T) -> Result<T>,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
) -> Result<T> {
    let m = (a + b) * T::of(0.5);
    let (lm, rm) = ((a + m) * T::of(0.5), (m + b) * T::of(0.5));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= T::of(15.0) * tol {
        return Ok(left + right + diff / T::of(15.0));
    }
    let half = tol * T::of(0.5);
    Ok(adaptive_simpson(f, a, m, fa, flm, fm, left, half, depth - 1)?
        + adaptive_simpson(f, m, b, fm, frm, fb, right, half, depth - 1)?)
}
