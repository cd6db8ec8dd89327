//! Linear time-invariant systems with discrete delays
//!
//! ```text
//! x'(t) = A_0 x(t) + sum_i A_i x(t - tau_i) + B u(t),   y(t) = C x(t)
//! ```

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::reduced_qr_with_reference;
use crate::linalg::SysMatrix;
use crate::scalar::Real;

/// Rank tolerance for the input matrix, relative to its Frobenius norm.
pub const RANK_TOL: f64 = 1e-12;

/// Unvalidated system data.
#[derive(Clone, Debug)]
pub struct SystemParts<T: Real> {
    /// `A_0, A_1, ..., A_m`.
    pub a: Vec<SysMatrix<T>>,
    /// `tau_1 < ... < tau_m`.
    pub taus: Vec<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    NoDelays,
    DelayCountMismatch { matrices: usize, delays: usize },
    NonSquare { index: usize, rows: usize, cols: usize },
    DimensionMismatch { what: String, expected: usize, found: usize },
    NonPositiveDelay { index: usize, value: f64 },
    DelayOrdering { index: usize, prev: f64, next: f64 },
    NonFinite { what: String },
    EmptyInput,
    RankDeficientInput { rank: usize, cols: usize },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NoDelays => write!(f, "at least one delay is required"),
            Issue::DelayCountMismatch { matrices, delays } => write!(
                f,
                "{matrices} system matrices need {} delays, got {delays}",
                matrices.saturating_sub(1)
            ),
            Issue::NonSquare { index, rows, cols } => write!(f, "A{index} is {rows}x{cols}, not square"),
            Issue::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected {expected}, found {found}")
            }
            Issue::NonPositiveDelay { index, value } => {
                write!(f, "delay tau_{} = {value} is not positive", index + 1)
            }
            Issue::DelayOrdering { index, prev, next } => write!(
                f,
                "delays not strictly increasing: tau_{} = {prev} >= tau_{} = {next}",
                index,
                index + 1
            ),
            Issue::NonFinite { what } => write!(f, "{what} has non-finite entries"),
            Issue::EmptyInput => write!(f, "B has no columns"),
            Issue::RankDeficientInput { rank, cols } => {
                write!(f, "B has rank {rank} < {cols} columns")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, pred: impl Fn(&Issue) -> bool) -> bool {
        self.issues.iter().any(pred)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Numerical rank of `b` under [`RANK_TOL`].
pub fn column_rank<T: Real>(b: &DMatrix<T>) -> usize {
    let scale = b.norm();
    if scale == T::zero() {
        return 0;
    }
    reduced_qr_with_reference(b, &vec![scale; b.ncols()]).q.ncols()
}

pub fn validate<T: Real>(parts: &SystemParts<T>) -> ValidationReport {
    let mut issues = Vec::new();
    if parts.taus.is_empty() {
        issues.push(Issue::NoDelays);
    }
    if parts.a.len() != parts.taus.len() + 1 {
        issues.push(Issue::DelayCountMismatch {
            matrices: parts.a.len(),
            delays: parts.taus.len(),
        });
    }
    let n = parts.a.first().map(|a| a.nrows()).unwrap_or(parts.b.nrows());
    for (i, a) in parts.a.iter().enumerate() {
        if a.nrows() != a.ncols() {
            issues.push(Issue::NonSquare { index: i, rows: a.nrows(), cols: a.ncols() });
        } else if a.nrows() != n {
            issues.push(Issue::DimensionMismatch {
                what: format!("dimension of A{i}"),
                expected: n,
                found: a.nrows(),
            });
        }
        if !a.is_finite() {
            issues.push(Issue::NonFinite { what: format!("A{i}") });
        }
    }
    for (i, &t) in parts.taus.iter().enumerate() {
        let v = t.to_f64_lossy();
        if !(v > 0.0) || !v.is_finite() {
            issues.push(Issue::NonPositiveDelay { index: i, value: v });
        }
        if i > 0 && parts.taus[i - 1] >= t {
            issues.push(Issue::DelayOrdering {
                index: i,
                prev: parts.taus[i - 1].to_f64_lossy(),
                next: v,
            });
        }
    }
    if parts.b.nrows() != n {
        issues.push(Issue::DimensionMismatch {
            what: "rows of B".into(),
            expected: n,
            found: parts.b.nrows(),
        });
    }
    if parts.c.ncols() != n {
        issues.push(Issue::DimensionMismatch {
            what: "columns of C".into(),
            expected: n,
            found: parts.c.ncols(),
        });
    }
    let finite = |m: &DMatrix<T>| m.iter().all(|v| v.to_f64_lossy().is_finite());
    if !finite(&parts.b) {
        issues.push(Issue::NonFinite { what: "B".into() });
    }
    if !finite(&parts.c) {
        issues.push(Issue::NonFinite { what: "C".into() });
    }
    if parts.b.ncols() == 0 {
        issues.push(Issue::EmptyInput);
    } else if finite(&parts.b) {
        let rank = column_rank(&parts.b);
        if rank < parts.b.ncols() {
            issues.push(Issue::RankDeficientInput { rank, cols: parts.b.ncols() });
        }
    }
    ValidationReport { issues }
}

/// A validated delay system. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct DelaySystem<T: Real> {
    a: Vec<SysMatrix<T>>,
    taus: Vec<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
}

impl<T: Real> DelaySystem<T> {
    pub fn new(parts: SystemParts<T>) -> Result<Self> {
        let report = validate(&parts);
        if !report.is_valid() {
            return Err(Error::InvalidSystem(report));
        }
        let SystemParts { a, taus, b, c } = parts;
        Ok(DelaySystem { a, taus, b, c })
    }

    /// Convenience constructor from dense matrices.
    pub fn from_dense(a: Vec<DMatrix<T>>, taus: Vec<T>, b: DMatrix<T>, c: DMatrix<T>) -> Result<Self> {
        Self::new(SystemParts {
            a: a.into_iter().map(SysMatrix::auto_dense).collect(),
            taus,
            b,
            c,
        })
    }

    /// Scalar system `x' = a0 x + a1 x(t - tau) + b u`, `y = c x`.
    pub fn scalar(a0: T, a1: T, tau: T, b: T, c: T) -> Result<Self> {
        let s = |v| DMatrix::from_element(1, 1, v);
        Self::from_dense(vec![s(a0), s(a1)], vec![tau], s(b), s(c))
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    /// Number of delays.
    pub fn m(&self) -> usize {
        self.taus.len()
    }

    /// Number of inputs.
    pub fn r(&self) -> usize {
        self.b.ncols()
    }

    /// Number of outputs.
    pub fn s(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &[SysMatrix<T>] {
        &self.a
    }

    pub fn taus(&self) -> &[T] {
        &self.taus
    }

    pub fn tau_max(&self) -> T {
        *self.taus.last().expect("validated system has a delay")
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn to_parts(&self) -> SystemParts<T> {
        SystemParts {
            a: self.a.clone(),
            taus: self.taus.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.to_parts())
    }

    /// `A_0 + sum_i A_i exp(-s tau_i)` for real `s`, dense.
    pub fn characteristic_sum(&self, weights: &[T]) -> SysMatrix<T> {
        let mats: Vec<&SysMatrix<T>> = self.a.iter().collect();
        SysMatrix::linear_combination(&mats, weights)
    }
}

/// The dual system `A_k -> A_k^T`, `B -> C^T`, `C -> B^T`. Its delay
/// Lyapunov matrix is the dual matrix `Q(t)` of the input system.
pub fn transpose_system<T: Real>(system: &DelaySystem<T>) -> Result<DelaySystem<T>> {
    DelaySystem::new(SystemParts {
        a: system.a.iter().map(|a| a.transpose()).collect(),
        taus: system.taus.clone(),
        b: system.c.transpose(),
        c: system.b.transpose(),
    })
}
