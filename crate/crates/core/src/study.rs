//! Convergence studies: normalized errors of the dense discretization
//! against the quadrature oracle as a function of `N`, and of the Krylov
//! approximation against a high-order self reference as a function of `k`.

use nalgebra::DMatrix;

use crate::discretization::{build_discretization, reference_lyapunov, reference_p_grid};
use crate::error::{Error, Result};
use crate::lyap::KrylovLyap;
use crate::model::DelaySystem;
use crate::oracles::{FundamentalSolution, delay_lyapunov_quadrature_grid, integrate_fundamental};
use crate::scalar::Real;

/// Largest oracle step used for references.
pub const ORACLE_MAX_STEP: f64 = 1e-3;
const MAX_REFINEMENT: usize = 100_000;
const MAX_HORIZON_DOUBLINGS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    /// `N` or `k`.
    pub param: usize,
    /// `max_t ||P(t) - P~(t)||_F / max_t ||P(t)||_F`.
    pub err_p: T,
    /// Relative `P(0)` error for `N` sweeps, relative H2 error for `k`
    /// sweeps.
    pub err_second: T,
}

#[derive(Clone, Debug)]
pub struct Sweep<T> {
    pub rows: Vec<SweepRow<T>>,
    pub slope_p: T,
    pub slope_second: T,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope<T: Real>(x: &[T], y: &[T]) -> T {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need two points for a slope");
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let len = T::of_usize(x.len());
    let mx = lx.iter().fold(T::zero(), |a, &b| a + b) / len;
    let my = ly.iter().fold(T::zero(), |a, &b| a + b) / len;
    let mut num = T::zero();
    let mut den = T::zero();
    for (a, b) in lx.iter().zip(&ly) {
        num += (*a - mx) * (*b - my);
        den += (*a - mx) * (*a - mx);
    }
    num / den
}

/// `max_j ||a_j - r_j||_F / max_j ||r_j||_F`.
pub fn normalized_max_error<T: Real>(approx: &[DMatrix<T>], reference: &[DMatrix<T>]) -> T {
    assert_eq!(approx.len(), reference.len());
    let scale = reference.iter().fold(T::zero(), |a, m| a.max(m.norm()));
    let worst = approx.iter().zip(reference).fold(T::zero(), |a, (x, r)| a.max((x - r).norm()));
    worst / scale
}

fn time_grid<T: Real>(t_max: T, samples: usize) -> Vec<T> {
    if samples <= 1 {
        return vec![T::zero(); samples];
    }
    let dt = t_max / T::of_usize(samples - 1);
    (0..samples).map(|j| dt * T::of_usize(j)).collect()
}

fn is_even_multiple(x: f64, h: f64) -> bool {
    let r = x / h;
    let k = r.round();
    (r - k).abs() <= 64.0 * f64::EPSILON * k + 1e-12 && (k as i64) % 2 == 0 && k >= 2.0
}

/// Largest step `tau_1 / q` (`q` a positive integer) not above `max_step`
/// such that every delay and every grid spacing is an even multiple of it.
pub fn commensurate_step(taus: &[f64], spacings: &[f64], max_step: f64) -> Option<f64> {
    let base = taus.first().copied()?;
    let mut q = (base / max_step).ceil().max(1.0) as usize;
    while q <= MAX_REFINEMENT {
        let h = base / q as f64;
        if h <= max_step * (1.0 + 1e-12)
            && taus.iter().all(|&t| is_even_multiple(t, h))
            && spacings.iter().all(|&s| s == 0.0 || is_even_multiple(s, h))
            && taus.iter().all(|&t| t / h >= 10.0 - 1e-9)
        {
            return Some(h);
        }
        q += 1;
    }
    None
}

/// The fundamental solution integrated far enough for the truncation test
/// to pass, doubling the horizon as needed.
pub fn settled_fundamental<T: Real>(system: &DelaySystem<T>, h: T, t_min: T) -> Result<FundamentalSolution<T>> {
    let mut horizon = (system.tau_max() * T::of(20.0)).max(t_min + T::of(50.0));
    // keep the horizon on the grid
    horizon = (horizon / h).ceil() * h;
    let mut last = None;
    for _ in 0..=MAX_HORIZON_DOUBLINGS {
        let ks = integrate_fundamental(system, h, horizon)?;
        match ks.check_truncation() {
            Ok(()) => return Ok(ks),
            Err(e) => last = Some(e),
        }
        horizon *= T::of(2.0);
    }
    Err(last.expect("at least one attempt"))
}

/// Quadrature-oracle `P(t)` on the uniform grid of `samples` points over
/// `[0, t_max]`.
pub fn oracle_reference<T: Real>(system: &DelaySystem<T>, t_max: T, samples: usize) -> Result<Vec<DMatrix<T>>> {
    let times = time_grid(t_max, samples);
    let taus: Vec<f64> = system.taus().iter().map(|t| t.to_f64_lossy()).collect();
    let spacing = if samples > 1 { times[1].to_f64_lossy() } else { 0.0 };
    let h = commensurate_step(&taus, &[spacing], ORACLE_MAX_STEP).ok_or(Error::GridMismatch {
        tau: taus.first().copied().unwrap_or(0.0),
        step: ORACLE_MAX_STEP,
    })?;
    let ks = settled_fundamental(system, T::of(h), t_max)?;
    delay_lyapunov_quadrature_grid(&ks, system.b(), &times)
}

/// Dense discretization errors for each `N` in `grid` against `reference`
/// sampled on the same time grid.
pub fn dense_sweep<T: Real>(
    system: &DelaySystem<T>,
    grid: &[usize],
    reference: &[DMatrix<T>],
    t_max: T,
) -> Result<Sweep<T>> {
    let samples = reference.len();
    let p0 = &reference[0];
    let mut rows = Vec::with_capacity(grid.len());
    for &n_res in grid {
        let r = build_discretization(system, n_res)?;
        let p_n = reference_lyapunov(&r)?;
        let approx = reference_p_grid(&r, &p_n, t_max, samples)?;
        rows.push(SweepRow {
            param: n_res,
            err_p: normalized_max_error(&approx, reference),
            err_second: (&approx[0] - p0).norm() / p0.norm(),
        });
    }
    Ok(finish(rows))
}

/// Krylov errors for each `k` in `grid` against the approximation of
/// order `k_ref`, reusing one Arnoldi run.
pub fn krylov_sweep<T: Real>(
    system: &DelaySystem<T>,
    grid: &[usize],
    k_ref: usize,
    t_max: T,
    samples: usize,
) -> Result<Sweep<T>> {
    let mut solver = KrylovLyap::new(system)?;
    let reference = solver.approx(k_ref)?;
    let p_ref = reference.eval_p_grid(t_max, samples)?;
    let h2_ref = reference.h2_norm();
    let mut rows = Vec::with_capacity(grid.len());
    for &k in grid {
        let a = solver.approx(k)?;
        let p = a.eval_p_grid(t_max, samples)?;
        rows.push(SweepRow {
            param: k,
            err_p: normalized_max_error(&p, &p_ref),
            err_second: (a.h2_norm() - h2_ref).abs() / h2_ref,
        });
    }
    Ok(finish(rows))
}

fn finish<T: Real>(rows: Vec<SweepRow<T>>) -> Sweep<T> {
    let (slope_p, slope_second) = if rows.len() >= 2 {
        let x: Vec<T> = rows.iter().map(|r| T::of_usize(r.param)).collect();
        let e1: Vec<T> = rows.iter().map(|r| r.err_p).collect();
        let e2: Vec<T> = rows.iter().map(|r| r.err_second).collect();
        (loglog_slope(&x, &e1), loglog_slope(&x, &e2))
    } else {
        (T::zero(), T::zero())
    };
    Sweep { rows, slope_p, slope_second }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.5)).collect();
        assert!((loglog_slope(&x, &y) + 2.5).abs() < 1e-12);
    }

    #[test]
    fn steps_divide_everything() {
        let h = commensurate_step(&[1.0], &[0.01], 1e-3).unwrap();
        assert!((h - 1e-3).abs() < 1e-15);
        let h = commensurate_step(&[2.8, 6.5, 13.2, 40.0], &[0.1], 1e-2).unwrap();
        assert!((h - 0.01).abs() < 1e-12, "{h}");
        assert!(commensurate_step(&[1.0, std::f64::consts::PI], &[], 1e-2).is_none());
    }
}
