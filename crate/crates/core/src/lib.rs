//! Delay Lyapunov matrices and H2 norms of linear time-invariant systems
//! with discrete delays,
//!
//! ```text
//! x'(t) = A_0 x(t) + sum_i A_i x(t - tau_i) + B u(t),   y(t) = C x(t),
//! ```
//!
//! computed by a block Arnoldi projection of a Chebyshev spectral
//! discretization whose cost does not depend on the discretization
//! resolution. A dense reference discretization and brute-force oracles
//! are included for validation.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common case.
//!
//! ```
//! use delay_lyap::{SolveOptions, benchmarks, low_rank_delay_lyapunov};
//!
//! let sys = benchmarks::didactic::<f64>();
//! let approx = low_rank_delay_lyapunov(&sys, &SolveOptions::fixed(30)).unwrap();
//! assert!((approx.h2_norm() - 2.5211220453).abs() < 1e-8);
//! ```

// `!(x > 0)` is used on purpose to reject NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod arnoldi;
pub mod benchmarks;
pub mod chebyshev;
pub mod discretization;
pub mod error;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod lyap;
pub mod model;
pub mod oracles;
pub mod pencil;
pub mod scalar;
pub mod study;

pub use arnoldi::{ArnoldiState, arnoldi_init, arnoldi_run};
pub use discretization::{DenseReference, build_discretization, discretized_h2, reference_lyapunov};
pub use error::{Error, Result};
pub use linalg::SysMatrix;
pub use lyap::{KrylovLyap, LyapApprox, RootEstimate, SolveOptions, Timings, characteristic_roots, low_rank_delay_lyapunov};
pub use model::{DelaySystem, SystemParts, ValidationReport, transpose_system, validate};
pub use pencil::{BlockVector, PencilContext};
pub use scalar::Real;

pub type DelaySystemF64 = DelaySystem<f64>;
pub type LyapApproxF64 = LyapApprox<f64>;
pub type SolveOptionsF64 = SolveOptions<f64>;
pub type ArnoldiStateF64 = ArnoldiState<f64>;
pub type DenseReferenceF64 = DenseReference<f64>;
pub type SysMatrixF64 = SysMatrix<f64>;
