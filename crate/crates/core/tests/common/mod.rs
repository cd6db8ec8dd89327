#![allow(dead_code)]

use std::sync::Arc;

use delay_lyap::{ArnoldiState, DelaySystem, PencilContext};
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn ctx(system: &DelaySystem<f64>) -> Arc<PencilContext<f64>> {
    Arc::new(PencilContext::new(system).unwrap())
}

/// The stacked basis of `k` block columns, zero padded to `N + 1` blocks.
pub fn padded_basis(state: &ArnoldiState<f64>, k: usize, n_res: usize) -> DMatrix<f64> {
    let b = state.basis(k);
    let mut out = DMatrix::zeros((n_res + 1) * state.n(), b.ncols());
    out.rows_mut(0, b.nrows()).copy_from(&b);
    out
}

pub fn norm2(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn cnorm(m: &DMatrix<Complex<f64>>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Pairs every eigenvalue in `a` with a distinct nearest one in `b` and
/// returns the worst distance relative to `max(1, |a_i|)`.
pub fn spectral_mismatch(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d / z.norm().max(1.0));
    }
    worst
}

/// A random system `A0 = -shift I + M0`, `A1 = M1` with spectral norms
/// small enough that the delay system is exponentially stable for every
/// delay (`||A1|| < shift - ||M0||`).
pub fn random_stable_system(rng: &mut ChaCha8Rng, n: usize, r: usize, m: usize) -> DelaySystem<f64> {
    let shift = 2.0;
    let mut a = Vec::with_capacity(m + 1);
    let scale = 0.9 / (m as f64 + 1.0);
    for i in 0..=m {
        let raw = random_matrix(rng, n, n);
        let s = norm2(&raw);
        let mut mi = raw * (scale * shift / s);
        if i == 0 {
            mi -= DMatrix::identity(n, n) * shift;
        }
        a.push(mi);
    }
    let mut taus: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..2.0)).collect();
    taus.sort_by(f64::total_cmp);
    for i in 1..m {
        if taus[i] <= taus[i - 1] + 0.05 {
            taus[i] = taus[i - 1] + 0.05;
        }
    }
    let b = random_matrix(rng, n, r);
    let c = random_matrix(rng, 2, n);
    DelaySystem::from_dense(a, taus, b, c).unwrap()
}
