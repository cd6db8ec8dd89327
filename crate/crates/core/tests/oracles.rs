use delay_lyap::benchmarks::{didactic, didactic2};
use delay_lyap::oracles::{delay_lyapunov_quadrature, h2_quadrature, h2_time_domain, integrate_fundamental};
use delay_lyap::study::settled_fundamental;
use delay_lyap::{build_discretization, discretized_h2, reference_lyapunov};

/// Didactic `P(0)` from the quadrature oracle at h = 5e-4, T = 150.
const DIDACTIC_P0_ORACLE: f64 = 6.356056367395289;
const DIDACTIC_H2_N512: f64 = 2.521122045316743;

#[test]
fn frozen_didactic_p0() {
    let s = didactic::<f64>();
    let ks = integrate_fundamental(&s, 5e-4, 150.0).unwrap();
    assert_eq!(ks.at(0)[(0, 0)], 1.0);
    let p0 = delay_lyapunov_quadrature(&ks, s.b(), 0.0).unwrap()[(0, 0)];
    assert!((p0 - DIDACTIC_P0_ORACLE).abs() <= 1e-12 * DIDACTIC_P0_ORACLE, "{p0:.17}");
}

#[test]
fn frequency_h2_agrees_with_dense_and_time_domain() {
    let s = didactic::<f64>();
    let freq = h2_quadrature(&s, 1e4, 2000).unwrap();
    assert!((freq - DIDACTIC_H2_N512).abs() <= 1e-5 * DIDACTIC_H2_N512, "{freq}");
    let ks = integrate_fundamental(&s, 2e-3, 150.0).unwrap();
    let time = h2_time_domain(&ks, s.b(), s.c()).unwrap();
    assert!((freq - time).abs() <= 1e-4 * time, "{freq} vs {time}");
    let doubled = h2_quadrature(&s, 2e4, 4000).unwrap();
    assert!((doubled - freq).abs() <= 1e-6 * freq, "{doubled} vs {freq}");
}

#[test]
fn multi_input_triangle() {
    let s = didactic2::<f64>();
    let ks = settled_fundamental(&s, 5e-3, 0.0).unwrap();
    let p0 = delay_lyapunov_quadrature(&ks, s.b(), 0.0).unwrap();
    assert!((&p0 - p0.transpose()).norm() <= 1e-6 * p0.norm());
    let r = build_discretization(&s, 64).unwrap();
    let pn = reference_lyapunov(&r).unwrap();
    let d = r.dim();
    let pn0 = pn.view((d - 3, d - 3), (3, 3)).clone_owned();
    assert!((p0.trace() - pn0.trace()).abs() <= 1e-4 * pn0.trace());
    let dense = discretized_h2(&r).unwrap();
    let freq = h2_quadrature(&s, 1e4, 2000).unwrap();
    assert!((freq - dense).abs() <= 1e-4 * dense, "{freq} vs {dense}");
}
