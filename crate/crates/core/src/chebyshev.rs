//! Chebyshev polynomials, the collocation mesh on `[-tau_m, 0]` and
//! barycentric interpolation on it.

use nalgebra::DMatrix;

use crate::scalar::Real;

/// `T_i(x)` by the three-term recurrence.
pub fn cheb_t<T: Real>(i: usize, x: T) -> T {
    let (mut prev, mut cur) = (T::one(), x);
    if i == 0 {
        return prev;
    }
    let two = T::of(2.0);
    for _ in 1..i {
        let next = two * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `U_i(x)` by the three-term recurrence.
pub fn cheb_u<T: Real>(i: usize, x: T) -> T {
    let two = T::of(2.0);
    let (mut prev, mut cur) = (T::one(), two * x);
    if i == 0 {
        return prev;
    }
    for _ in 1..i {
        let next = two * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Collocation points `theta_i = (tau_m / 2)(-cos(pi i / (N+1)) - 1)`,
/// `i = 1..=N+1`, with barycentric weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T: Real> {
    n: usize,
    tau_max: T,
    points: Vec<T>,
    weights: Vec<T>,
}

pub fn build_mesh<T: Real>(n: usize, tau_max: T) -> Mesh<T> {
    assert!(n >= 1, "mesh needs N >= 1");
    assert!(tau_max > T::zero(), "mesh needs a positive delay");
    let half = tau_max * T::of(0.5);
    let mut points: Vec<T> = (1..=n + 1)
        .map(|i| {
            let alpha = -(T::pi() * T::of_usize(i) / T::of_usize(n + 1)).cos();
            half * (alpha - T::one())
        })
        .collect();
    points[n] = T::zero();
    let weights = barycentric_weights(&points, tau_max);
    Mesh { n, tau_max, points, weights }
}

/// Weights `1 / prod_{j != k}(theta_k - theta_j)` rescaled to unit maximum,
/// accumulated in log form so that large `N` neither overflows nor
/// underflows.
fn barycentric_weights<T: Real>(points: &[T], length: T) -> Vec<T> {
    let scale = T::of(4.0) / length;
    let mut logs = Vec::with_capacity(points.len());
    let mut signs = Vec::with_capacity(points.len());
    for (k, &pk) in points.iter().enumerate() {
        let mut log = T::zero();
        let mut neg = false;
        for (j, &pj) in points.iter().enumerate() {
            if j != k {
                let d = (pk - pj) * scale;
                neg ^= d < T::zero();
                log += d.abs().ln();
            }
        }
        logs.push(-log);
        signs.push(neg);
    }
    let top = logs.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b));
    logs.iter()
        .zip(signs)
        .map(|(&l, neg)| {
            let w = (l - top).exp();
            if neg { -w } else { w }
        })
        .collect()
}

impl<T: Real> Mesh<T> {
    /// The resolution parameter `N` (the mesh has `N + 1` points).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau_max(&self) -> T {
        self.tau_max
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Differentiation matrix `D[i][k] = l_k'(theta_i)` of the interpolant
/// through all mesh points. The diagonal is the negated off-diagonal row
/// sum.
pub fn diff_matrix<T: Real>(mesh: &Mesh<T>) -> DMatrix<T> {
    let p = &mesh.points;
    let w = &mesh.weights;
    let len = p.len();
    let mut d = DMatrix::zeros(len, len);
    for i in 0..len {
        let mut diag = T::zero();
        for k in 0..len {
            if k != i {
                let v = (w[k] / w[i]) / (p[i] - p[k]);
                d[(i, k)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// `(l_1(theta), ..., l_{N+1}(theta))` by the second barycentric formula;
/// an exact unit vector when `theta` is a mesh point.
pub fn lagrange_eval_weights<T: Real>(mesh: &Mesh<T>, theta: T) -> Vec<T> {
    let p = &mesh.points;
    let mut out = vec![T::zero(); p.len()];
    if let Some(j) = p.iter().position(|&x| x == theta) {
        out[j] = T::one();
        return out;
    }
    let mut sum = T::zero();
    for (k, o) in out.iter_mut().enumerate() {
        *o = mesh.weights[k] / (theta - p[k]);
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}
