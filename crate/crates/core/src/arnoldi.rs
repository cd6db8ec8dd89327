//! Block Arnoldi iteration on `G` that exploits its block Hessenberg
//! structure: block column `j` of the basis has exactly `j + 1` nonzero
//! blocks, so the work per step grows with the step count and not with any
//! discretization resolution.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{reduced_qr, reduced_qr_with_reference};
use crate::pencil::{BlockVector, PencilContext};
use crate::scalar::Real;

/// Columns dropped by deflation at one step (`step == 0` is the start).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deflation {
    pub step: usize,
    pub dropped: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ArnoldiState<T: Real> {
    ctx: Arc<PencilContext<T>>,
    /// Block column `j` is `(j + 1) n` rows tall.
    v: Vec<DMatrix<T>>,
    /// Rectangular block Hessenberg matrix of the completed steps.
    h: DMatrix<T>,
    /// `offsets[j]` is the first scalar column of block column `j`.
    offsets: Vec<usize>,
    /// `x_0 = Q_0 R0_tilde`.
    r0_tilde: DMatrix<T>,
    log: Vec<Deflation>,
}

/// Initial state from the reduced QR of `x_0 = R_0^{-1} B`.
pub fn arnoldi_init<T: Real>(ctx: Arc<PencilContext<T>>) -> Result<ArnoldiState<T>> {
    let x0 = ctx.starting_block();
    let qr = reduced_qr(&x0);
    if qr.q.ncols() == 0 {
        return Err(Error::ZeroStart);
    }
    let mut log = Vec::new();
    if !qr.dropped.is_empty() {
        log.push(Deflation { step: 0, dropped: qr.dropped });
    }
    let w = qr.q.ncols();
    Ok(ArnoldiState {
        ctx,
        v: vec![qr.q],
        h: DMatrix::zeros(w, 0),
        offsets: vec![0, w],
        r0_tilde: qr.r,
        log,
    })
}

/// `k` steps from a fresh start.
pub fn arnoldi_run<T: Real>(ctx: Arc<PencilContext<T>>, k: usize) -> Result<ArnoldiState<T>> {
    let mut s = arnoldi_init(ctx)?;
    s.run_to(k);
    Ok(s)
}

impl<T: Real> ArnoldiState<T> {
    pub fn ctx(&self) -> &Arc<PencilContext<T>> {
        &self.ctx
    }

    /// Completed steps.
    pub fn k(&self) -> usize {
        self.v.len() - 1
    }

    pub fn n(&self) -> usize {
        self.ctx.n()
    }

    /// Width of block column `j`.
    pub fn width(&self, j: usize) -> usize {
        self.v[j].ncols()
    }

    /// Total number of scalar columns in block columns `0..j`.
    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn basis_column(&self, j: usize) -> &DMatrix<T> {
        &self.v[j]
    }

    pub fn r0_tilde(&self) -> &DMatrix<T> {
        &self.r0_tilde
    }

    pub fn deflation_log(&self) -> &[Deflation] {
        &self.log
    }

    /// One Arnoldi step: expand the newest block column by `G`,
    /// orthogonalize twice against the basis, normalize with deflation.
    pub fn step(&mut self) {
        let j = self.k();
        let n = self.n();
        let wj = self.width(j);
        let rows = (j + 2) * n;
        let (q, coeffs, r) = if wj == 0 {
            (DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(0, 0))
        } else {
            let mut w = self.ctx.apply_g(&BlockVector::new(n, self.v[j].clone())).into_data();
            let reference: Vec<T> = w.column_iter().map(|c| c.norm()).collect();
            let mut coeffs: Vec<DMatrix<T>> =
                self.v.iter().map(|vi| DMatrix::zeros(vi.ncols(), wj)).collect();
            for _pass in 0..2 {
                let c: Vec<DMatrix<T>> = self
                    .v
                    .iter()
                    .map(|vi| vi.tr_mul(&w.rows(0, vi.nrows())))
                    .collect();
                for (i, vi) in self.v.iter().enumerate() {
                    let mut top = w.rows_mut(0, vi.nrows());
                    top.gemm(-T::one(), vi, &c[i], T::one());
                    coeffs[i] += &c[i];
                }
            }
            let qr = reduced_qr_with_reference(&w, &reference);
            if !qr.dropped.is_empty() {
                self.log.push(Deflation { step: j + 1, dropped: qr.dropped });
            }
            (qr.q, coeffs, qr.r)
        };
        let wn = q.ncols();
        let old_rows = self.offsets[j + 1];
        let old_cols = self.offsets[j];
        let mut h = DMatrix::zeros(old_rows + wn, old_cols + wj);
        h.view_mut((0, 0), (old_rows, old_cols)).copy_from(&self.h);
        for (i, c) in coeffs.iter().enumerate() {
            h.view_mut((self.offsets[i], old_cols), (c.nrows(), wj)).copy_from(c);
        }
        if wj > 0 {
            h.view_mut((old_rows, old_cols), (wn, wj)).copy_from(&r);
        }
        self.h = h;
        self.offsets.push(old_rows + wn);
        self.v.push(q);
    }

    /// Continues until `k` steps are complete; no-op if already there.
    pub fn run_to(&mut self, k: usize) {
        while self.k() < k {
            self.step();
        }
    }

    /// `H_k` with underline: `offset(k+1) x offset(k)`.
    pub fn h_rect(&self, k: usize) -> DMatrix<T> {
        assert!(k <= self.k());
        self.h.view((0, 0), (self.offsets[k + 1], self.offsets[k])).clone_owned()
    }

    /// Leading square part `V_k^T G V_k` of size `offset(k)`.
    pub fn h_square(&self, k: usize) -> DMatrix<T> {
        assert!(k <= self.k());
        let d = self.offsets[k];
        self.h.view((0, 0), (d, d)).clone_owned()
    }

    /// The stacked basis of the first `k` block columns, `k n x offset(k)`.
    pub fn basis(&self, k: usize) -> DMatrix<T> {
        let n = self.n();
        let mut out = DMatrix::zeros(k * n, self.offsets[k]);
        for j in 0..k {
            let vj = &self.v[j];
            out.view_mut((0, self.offsets[j]), (vj.nrows(), vj.ncols())).copy_from(vj);
        }
        out
    }

    /// `V_k^T H` from the Arnoldi coefficients of the first step:
    /// `G x_0 = (V_0 H_00 + V_1 H_10) R0_tilde`.
    pub fn projected_h(&self, k: usize) -> DMatrix<T> {
        assert!(k >= 1 && self.k() >= 1);
        let rows = self.offsets[k];
        let top = self.offsets[2.min(k)];
        let w0 = self.width(0);
        let mut out = DMatrix::zeros(rows, self.r0_tilde.ncols());
        let coeff = self.h.view((0, 0), (top, w0)) * &self.r0_tilde;
        out.rows_mut(0, top).copy_from(&coeff);
        out
    }

    /// `||V_k^T V_k - I||_F`.
    pub fn orthonormality_error(&self, k: usize) -> T {
        let b = self.basis(k);
        let d = b.ncols();
        (b.tr_mul(&b) - DMatrix::identity(d, d)).norm()
    }

    /// `max_j ||G V_j - sum_i V_i H_ij||_F` over the first `k` block
    /// columns, relative to `||H_k||_F`. Uses `k` additional solves.
    pub fn relation_residual(&self, k: usize) -> T {
        let n = self.n();
        let mut worst = T::zero();
        for j in 0..k.min(self.k()) {
            if self.width(j) == 0 {
                continue;
            }
            let mut g = self.ctx.apply_g(&BlockVector::new(n, self.v[j].clone())).into_data();
            for i in 0..=j + 1 {
                let vi = &self.v[i];
                let hij = self.h.view((self.offsets[i], self.offsets[j]), (vi.ncols(), self.width(j)));
                let mut top = g.rows_mut(0, vi.nrows());
                top.gemm(-T::one(), vi, &hij, T::one());
            }
            worst = worst.max(g.norm());
        }
        let scale = self.h_rect(k.min(self.k())).norm();
        if scale > T::zero() { worst / scale } else { worst }
    }
}
