//! The structured pencil `(Sigma, Pi)` with `G = Sigma^{-1} Pi` similar to
//! the inverse of the discretized state matrix.
//!
//! Block rows and columns are indexed from zero here; block `0` carries the
//! `R_i` couplings in `Sigma` and the row of identities in `Pi`. Only the
//! leading nonzero blocks of every vector are stored, so nothing depends on
//! the resolution `N` as long as `N` exceeds the number of stored blocks.

use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;

use crate::chebyshev::cheb_t;
use crate::error::Result;
use crate::linalg::{LuFactor, SysMatrix};
use crate::model::DelaySystem;
use crate::scalar::Real;

/// A tall matrix made of `n`-row blocks of which only the leading `active`
/// ones are stored; all later blocks are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector<T: Real> {
    n: usize,
    data: DMatrix<T>,
}

impl<T: Real> BlockVector<T> {
    pub fn new(n: usize, data: DMatrix<T>) -> Self {
        assert!(n > 0 && data.nrows().is_multiple_of(n), "rows must be a multiple of the block height");
        BlockVector { n, data }
    }

    pub fn from_blocks(blocks: &[DMatrix<T>]) -> Self {
        let n = blocks[0].nrows();
        let w = blocks[0].ncols();
        let mut data = DMatrix::zeros(n * blocks.len(), w);
        for (p, b) in blocks.iter().enumerate() {
            data.view_mut((p * n, 0), (n, w)).copy_from(b);
        }
        BlockVector { n, data }
    }

    pub fn block_height(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn active(&self) -> usize {
        self.data.nrows() / self.n
    }

    pub fn block(&self, p: usize) -> nalgebra::DMatrixView<'_, T> {
        self.data.view((p * self.n, 0), (self.n, self.width()))
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<T> {
        self.data
    }

    /// Zero-padded to `blocks` blocks.
    pub fn padded(&self, blocks: usize) -> DMatrix<T> {
        assert!(blocks >= self.active());
        let mut out = DMatrix::zeros(blocks * self.n, self.width());
        out.rows_mut(0, self.data.nrows()).copy_from(&self.data);
        out
    }
}

/// Shared data for applying `G`, `H` and `F`: the lazily grown list of
/// `R_i = A_0 T_i(1) + sum_k A_k T_i(1 - 2 tau_k / tau_m)` and a single LU
/// factorization of `R_0 = sum_k A_k`.
pub struct PencilContext<T: Real> {
    system: DelaySystem<T>,
    args: Vec<T>,
    r0: LuFactor<T>,
    cache: RwLock<Vec<Arc<SysMatrix<T>>>>,
}

impl<T: Real> std::fmt::Debug for PencilContext<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PencilContext")
            .field("n", &self.system.n())
            .field("cached", &self.cache.read().unwrap().len())
            .field("r0", &self.r0)
            .finish()
    }
}

impl<T: Real> PencilContext<T> {
    /// Fails with `SingularR0` when `R_0` is numerically singular, that is
    /// when zero is a characteristic root.
    pub fn new(system: &DelaySystem<T>) -> Result<Self> {
        let tm = system.tau_max();
        let mut args = vec![T::one()];
        args.extend(system.taus().iter().map(|&t| T::one() - T::of(2.0) * t / tm));
        let r0 = Self::combine(system, &args, 0);
        let lu = LuFactor::new(&r0)?;
        Ok(PencilContext {
            system: system.clone(),
            args,
            r0: lu,
            cache: RwLock::new(vec![Arc::new(r0)]),
        })
    }

    fn combine(system: &DelaySystem<T>, args: &[T], i: usize) -> SysMatrix<T> {
        let coeffs: Vec<T> = args.iter().map(|&x| cheb_t(i, x)).collect();
        system.characteristic_sum(&coeffs)
    }

    pub fn system(&self) -> &DelaySystem<T> {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn tau_max(&self) -> T {
        self.system.tau_max()
    }

    pub fn r0_factor(&self) -> &LuFactor<T> {
        &self.r0
    }

    /// Number of solves with `R_0` performed so far.
    pub fn solve_count(&self) -> usize {
        self.r0.solve_count()
    }

    pub fn get_r(&self, i: usize) -> Arc<SysMatrix<T>> {
        if let Some(r) = self.cache.read().unwrap().get(i) {
            return Arc::clone(r);
        }
        let mut cache = self.cache.write().unwrap();
        while cache.len() <= i {
            let next = cache.len();
            cache.push(Arc::new(Self::combine(&self.system, &self.args, next)));
        }
        Arc::clone(&cache[i])
    }

    /// `y = G x`; the result has one more active block than `x`.
    pub fn apply_g(&self, x: &BlockVector<T>) -> BlockVector<T> {
        let n = self.n();
        let j = x.active();
        let w = x.width();
        assert!(j >= 1, "apply_g needs at least one active block");
        assert_eq!(x.block_height(), n);
        let quarter = self.tau_max() * T::of(0.25);
        let mut y = DMatrix::zeros((j + 1) * n, w);
        // rows 1..=j of Pi
        for q in 1..=j {
            let mut out = y.view_mut((q * n, 0), (n, w));
            if q == 1 {
                out.copy_from(&(x.block(0) * (quarter * T::of(2.0))));
                if j > 2 {
                    out -= x.block(2) * quarter;
                }
            } else {
                let c = quarter / T::of_usize(q);
                out.copy_from(&(x.block(q - 1) * c));
                if q + 1 < j {
                    out -= x.block(q + 1) * c;
                }
            }
        }
        // first row of Pi sums every block
        let mut rhs = DMatrix::zeros(n, w);
        for p in 0..j {
            rhs += x.block(p);
        }
        for p in 1..=j {
            let rp = self.get_r(p);
            rp.gemm_acc(-T::one(), &y.view((p * n, 0), (n, w)), &mut rhs.as_view_mut());
        }
        let y0 = self.r0.solve(&rhs);
        y.view_mut((0, 0), (n, w)).copy_from(&y0);
        BlockVector::new(n, y)
    }

    /// `x_0 = R_0^{-1} B`.
    pub fn starting_block(&self) -> DMatrix<T> {
        self.r0.solve(self.system.b())
    }

    /// The two nonzero blocks of `H`,
    /// `[R_0^{-1}(I - tau_m/2 R_1) R_0^{-1} B; tau_m/2 R_0^{-1} B]`.
    pub fn build_h_blocks(&self) -> BlockVector<T> {
        let x0 = self.starting_block();
        let half = self.tau_max() * T::of(0.5);
        let mut rhs = x0.clone();
        self.get_r(1).gemm_acc(-half, &x0.as_view(), &mut rhs.as_view_mut());
        let first = self.r0.solve(&rhs);
        let second = x0 * half;
        BlockVector::from_blocks(&[first, second])
    }

    /// `sum_p R_p V_p` over the leading `k_blocks` blocks of `v`.
    pub fn apply_f(&self, v: &DMatrix<T>, k_blocks: usize) -> DMatrix<T> {
        let n = self.n();
        assert!(v.nrows() >= k_blocks * n);
        let mut out = DMatrix::zeros(n, v.ncols());
        for p in 0..k_blocks {
            self.get_r(p)
                .gemm_acc(T::one(), &v.view((p * n, 0), (n, v.ncols())), &mut out.as_view_mut());
        }
        out
    }
}

/// Dense assembly of the pencil at a fixed resolution, for testing and for
/// small reference computations.
pub mod dense {
    use super::*;

    /// `Sigma_N`: first block row `[R_0 ... R_N]`, identity below.
    pub fn sigma<T: Real>(ctx: &PencilContext<T>, n_res: usize) -> DMatrix<T> {
        let n = ctx.n();
        let d = (n_res + 1) * n;
        let mut s = DMatrix::identity(d, d);
        for i in 0..=n_res {
            s.view_mut((0, i * n), (n, n)).copy_from(&ctx.get_r(i).to_dense());
        }
        s
    }

    /// `Pi_N`.
    pub fn pi<T: Real>(ctx: &PencilContext<T>, n_res: usize) -> DMatrix<T> {
        let n = ctx.n();
        let len = n_res + 1;
        let quarter = ctx.tau_max() * T::of(0.25);
        let mut s = DMatrix::<T>::zeros(len, len);
        for k in 0..len {
            s[(0, k)] = T::one();
        }
        if len > 1 {
            s[(1, 0)] = quarter * T::of(2.0);
            if len > 2 {
                s[(1, 2)] = -quarter;
            }
        }
        for q in 2..len {
            let c = quarter / T::of_usize(q);
            s[(q, q - 1)] = c;
            if q + 1 < len {
                s[(q, q + 1)] = -c;
            }
        }
        s.kronecker(&DMatrix::identity(n, n))
    }

    pub fn g<T: Real>(ctx: &PencilContext<T>, n_res: usize) -> DMatrix<T> {
        sigma(ctx, n_res)
            .lu()
            .solve(&pi(ctx, n_res))
            .expect("Sigma_N is nonsingular when R_0 is")
    }

    pub fn h<T: Real>(ctx: &PencilContext<T>, n_res: usize) -> DMatrix<T> {
        ctx.build_h_blocks().padded(n_res + 1)
    }

    /// `F_N = [R_0 ... R_N]`.
    pub fn f<T: Real>(ctx: &PencilContext<T>, n_res: usize) -> DMatrix<T> {
        sigma(ctx, n_res).rows(0, ctx.n()).clone_owned()
    }
}
