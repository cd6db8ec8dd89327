//! The benchmark systems used throughout the tests and the command-line
//! tool.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::SysMatrix;
use crate::model::{DelaySystem, SystemParts};
use crate::scalar::Real;

pub const EXAMPLES: [&str; 5] = ["didactic", "didactic2", "heat-exchanger", "pde1", "pde2"];
/// Grid size of the PDE examples when none is given.
pub const DEFAULT_PDE_N: usize = 200;

fn dense<T: Real>(rows: usize, cols: usize, vals: &[f64]) -> DMatrix<T> {
    DMatrix::from_row_slice(rows, cols, &vals.iter().map(|&v| T::of(v)).collect::<Vec<_>>())
}

fn from_entries<T: Real>(n: usize, entries: &[(usize, usize, f64)]) -> SysMatrix<T> {
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, v) in entries {
        m[(i - 1, j - 1)] = T::of(v);
    }
    SysMatrix::Dense(m)
}

/// `x' = x/2 - x(t - 1) + u`, `y = x`.
pub fn didactic<T: Real>() -> DelaySystem<T> {
    DelaySystem::scalar(T::of(0.5), -T::one(), T::one(), T::one(), T::one()).expect("valid")
}

/// Three states, one delay of 5, a single input driving every state and
/// the first state as output.
pub fn didactic2<T: Real>() -> DelaySystem<T> {
    let a0 = dense(3, 3, &[-0.08, -0.03, 0.2, 0.2, -0.04, -0.005, -0.06, 0.2, -0.07]);
    let a1 = dense(3, 3, &[-0.0471, -0.0504, -0.0602, -0.0942, -0.1008, -0.1204, 0.0471, 0.0504, 0.0602]);
    DelaySystem::from_dense(
        vec![a0, a1],
        vec![T::of(5.0)],
        dense(3, 1, &[1.0, 1.0, 1.0]),
        dense(1, 3, &[1.0, 0.0, 0.0]),
    )
    .expect("valid")
}

/// Five states and seven delays; every state is an output.
pub fn heat_exchanger<T: Real>() -> DelaySystem<T> {
    let n = 5;
    let a = vec![
        from_entries(n, &[(2, 1, 1.0 / 3.0), (2, 2, -2.0 / 3.0), (3, 3, -1.0 / 3.0), (5, 4, -1.0)]),
        from_entries(n, &[(4, 3, 0.0324)]),
        from_entries(n, &[(1, 1, -0.07142857143)]),
        from_entries(n, &[(4, 4, -0.04)]),
        from_entries(n, &[(2, 4, 1.0 / 3.0)]),
        from_entries(
            n,
            &[
                (1, 1, -0.01219364644),
                (1, 2, -0.05460277319),
                (1, 3, -0.1005215423),
                (1, 4, -0.1290047174),
                (1, 5, 0.005063395489),
            ],
        ),
        from_entries(n, &[(3, 2, 0.3133333333)]),
        from_entries(n, &[(1, 2, 0.01714285714)]),
    ];
    let taus = [2.8, 6.5, 9.2, 13.0, 13.2, 18.0, 40.0].iter().map(|&t| T::of(t)).collect();
    let mut b = DMatrix::zeros(n, 1);
    b[(0, 0)] = T::of(0.0278571429);
    DelaySystem::new(SystemParts { a, taus, b, c: DMatrix::identity(n, n) }).expect("valid")
}

/// Central differences of the heat equation on `[0, pi]` with `n` grid
/// points, boundary points included.
fn laplacian<T: Real>(n: usize, extra_diag: impl Fn(usize) -> f64) -> Vec<(usize, usize, T)> {
    let c = ((n - 1) as f64 / PI).powi(2);
    let mut trip = Vec::with_capacity(3 * n);
    for i in 0..n {
        trip.push((i, i, T::of(-2.0 * c + extra_diag(i))));
        if i + 1 < n {
            trip.push((i, i + 1, T::of(c)));
            trip.push((i + 1, i, T::of(c)));
        }
    }
    trip
}

fn average_output<T: Real>(n: usize) -> (DMatrix<T>, DMatrix<T>) {
    let c = DMatrix::from_element(1, n, T::one() / T::of_usize(n).sqrt());
    (c.transpose(), c)
}

fn check_pde_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument { arg: "n", reason: "the PDE examples need at least 3 grid points".into() });
    }
    Ok(())
}

/// Heat equation with localized delayed feedback `-(x/4) v(x, t - 1)`.
pub fn pde1<T: Real>(n: usize) -> Result<DelaySystem<T>> {
    check_pde_n(n)?;
    let a0 = SysMatrix::from_triplets(n, n, &laplacian::<T>(n, |_| 0.0));
    let h = PI / (n - 1) as f64;
    let diag: Vec<(usize, usize, T)> = (0..n).map(|j| (j, j, T::of(-0.25 * j as f64 * h))).collect();
    let a1 = SysMatrix::from_triplets(n, n, &diag);
    let (b, c) = average_output(n);
    DelaySystem::new(SystemParts { a: vec![a0, a1], taus: vec![T::one()], b, c })
}

/// Heat equation with Pyragas-type feedback
/// `-2 sin(x) v(x, t) + 2 sin(x) v(pi - x, t - 1)`.
pub fn pde2<T: Real>(n: usize) -> Result<DelaySystem<T>> {
    check_pde_n(n)?;
    let s = |j: usize| if j == 0 || j == n - 1 { 0.0 } else { (j as f64 * PI / (n - 1) as f64).sin() };
    let a0 = SysMatrix::from_triplets(n, n, &laplacian::<T>(n, |i| -2.0 * s(i)));
    let anti: Vec<(usize, usize, T)> =
        (0..n).filter(|&j| s(j) != 0.0).map(|j| (j, n - 1 - j, T::of(2.0 * s(j)))).collect();
    let a1 = SysMatrix::from_triplets(n, n, &anti);
    let (b, c) = average_output(n);
    DelaySystem::new(SystemParts { a: vec![a0, a1], taus: vec![T::one()], b, c })
}

/// A built-in example by name; `n` only affects the PDE examples.
pub fn generate_example<T: Real>(name: &str, n: Option<usize>) -> Result<DelaySystem<T>> {
    let n = n.unwrap_or(DEFAULT_PDE_N);
    match name {
        "didactic" => Ok(didactic()),
        "didactic2" => Ok(didactic2()),
        "heat-exchanger" => Ok(heat_exchanger()),
        "pde1" => pde1(n),
        "pde2" => pde2(n),
        other => Err(Error::InvalidArgument {
            arg: "example",
            reason: format!("unknown example `{other}` (expected one of {})", EXAMPLES.join(", ")),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_exchanger_entries() {
        let s = heat_exchanger::<f64>();
        assert_eq!(s.m(), 7);
        assert_eq!(s.a()[0].get(1, 0), 1.0 / 3.0);
        assert_eq!(s.a()[0].get(4, 3), -1.0);
        assert_eq!(s.b()[(0, 0)], 0.0278571429);
        assert_eq!(s.c(), &DMatrix::identity(5, 5));
    }

    #[test]
    fn didactic2_entries() {
        let s = didactic2::<f64>();
        assert_eq!(s.a()[0].get(0, 0), -0.08);
        assert_eq!(s.a()[1].get(2, 2), 0.0602);
        assert_eq!(s.taus(), &[5.0]);
    }

    #[test]
    fn pde2_small() {
        let n = 5;
        let s = pde2::<f64>(n).unwrap();
        let c = (4.0 / PI).powi(2);
        let a0 = s.a()[0].to_dense();
        assert_eq!(a0[(0, 0)], -2.0 * c);
        assert_eq!(a0[(4, 4)], -2.0 * c);
        assert_eq!(a0[(2, 1)], c);
        assert_eq!(a0[(2, 3)], c);
        assert!((a0[(2, 2)] - (-2.0 * c - 2.0)).abs() < 1e-14);
        let a1 = s.a()[1].to_dense();
        assert!((a1[(1, 3)] - 2.0 * (PI / 4.0).sin()).abs() < 1e-15);
        assert_eq!(a1[(0, 4)], 0.0);
        assert!((s.c().norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.b(), &s.c().transpose());
    }

    #[test]
    fn pde_is_sparse_at_scale() {
        let s = pde2::<f64>(1000).unwrap();
        assert!(s.a().iter().all(|a| a.is_sparse()));
        assert!(generate_example::<f64>("nope", None).is_err());
    }
}
