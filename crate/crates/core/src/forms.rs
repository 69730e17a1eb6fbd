//! Kernel quadratic forms over stacked grid strategies.
//!
//! For a kernel and a grid, [`QuadraticForms`] holds two matrices indexed by
//! the stacked `[blocks, rates]` layout:
//!
//! * `sym[a][b]`: the contribution of unit trades `a`, `b` to
//!   `∫∫ G(|t - s|) dX_s dY_t` (symmetric),
//! * `ord[a][b]`: the contribution to the ordered integral
//!   `∫_0^T ∫_0^{t-} G(t - s) dM_s dN_t`, with `a` a trade of the earlier
//!   integrator `M` and `b` one of `N`. Simultaneous block trades are
//!   excluded; a rate cell paired with itself contributes half its diagonal
//!   double integral.
//!
//! Under a singular kernel the block rows and columns are left at zero and
//! every strategy with a nonzero block is refused.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::kernels::Kernel;
use crate::strategy::{Strategy, TradingGrid};

#[derive(Debug, Clone)]
pub struct QuadraticForms {
    kernel: Kernel,
    grid: TradingGrid,
    sym: DMatrix<f64>,
    ord: DMatrix<f64>,
}

impl QuadraticForms {
    pub fn new(kernel: &Kernel, grid: &TradingGrid) -> Result<Self> {
        let n = grid.intervals();
        let dim = grid.stacked_len();
        let t = grid.times();
        let mut sym = DMatrix::zeros(dim, dim);
        let mut ord = DMatrix::zeros(dim, dim);
        let bounded = kernel.is_bounded();

        if bounded {
            for k in 0..=n {
                for l in 0..=n {
                    let g = kernel.value((t[k] - t[l]).abs());
                    sym[(k, l)] = g;
                    if k < l {
                        ord[(k, l)] = g;
                    }
                }
                for m in 0..n {
                    let (a, b) = grid.interval(m);
                    let r = grid.rate_index(m);
                    let v = kernel.point_cell_integral(t[k], a, b);
                    sym[(k, r)] = v;
                    sym[(r, k)] = v;
                    if k <= m {
                        // block at or before the cell start, rate after it
                        ord[(k, r)] = kernel.integral(a - t[k], b - t[k]);
                    } else {
                        // the cell lies entirely before the block
                        ord[(r, k)] = kernel.integral(t[k] - b, t[k] - a);
                    }
                }
            }
        }
        for m in 0..n {
            let rm = grid.rate_index(m);
            for l in m..n {
                let rl = grid.rate_index(l);
                let v = kernel.cell_double_integral(grid.interval(m), grid.interval(l))?;
                sym[(rm, rl)] = v;
                sym[(rl, rm)] = v;
                if l == m {
                    ord[(rm, rm)] = 0.5 * v;
                } else {
                    ord[(rm, rl)] = v;
                }
            }
        }
        Ok(Self {
            kernel: *kernel,
            grid: grid.clone(),
            sym,
            ord,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &TradingGrid {
        &self.grid
    }

    pub fn symmetric_matrix(&self) -> &DMatrix<f64> {
        &self.sym
    }

    pub fn ordered_matrix(&self) -> &DMatrix<f64> {
        &self.ord
    }

    /// `(G(0)/2)` on the block diagonal; zero for singular kernels (where no
    /// admissible strategy has blocks).
    pub fn simultaneity_weight(&self) -> f64 {
        self.kernel.g0().as_option().map_or(0.0, |g0| 0.5 * g0)
    }

    /// `ord + (G(0)/2) I_blocks`: the full cross-trader form, earlier trader
    /// on the left.
    pub fn cross_matrix(&self) -> DMatrix<f64> {
        let mut m = self.ord.clone();
        let w = self.simultaneity_weight();
        for k in 0..=self.grid.intervals() {
            m[(k, k)] += w;
        }
        m
    }

    pub(crate) fn check(&self, x: &Strategy) -> Result<()> {
        if x.grid() != &self.grid {
            return Err(Error::Structural("strategy grid differs from the form's grid".into()));
        }
        if self.kernel.is_singular() && x.has_blocks() {
            return Err(Error::Admissibility(
                "nonzero block under singular kernel: block trades have infinite impact".into(),
            ));
        }
        Ok(())
    }

    fn bilinear(&self, m: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for (b, &yb) in y.iter().enumerate() {
                row += m[(a, b)] * yb;
            }
            acc += xa * row;
        }
        acc
    }

    /// `∫∫ G(|t - s|) dX_s dY_t`.
    pub fn symmetric(&self, x: &Strategy, y: &Strategy) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.bilinear(&self.sym, &x.stacked(), &y.stacked()))
    }

    /// `∫_0^T ∫_0^{t-} G(t - s) dM_s dN_t`.
    pub fn ordered(&self, inner: &Strategy, outer: &Strategy) -> Result<f64> {
        self.check(inner)?;
        self.check(outer)?;
        Ok(self.bilinear(&self.ord, &inner.stacked(), &outer.stacked()))
    }

    /// `(G(0)/2) sum_t ΔX_t ΔY_t`.
    pub fn simultaneous(&self, x: &Strategy, y: &Strategy) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        if !x.has_blocks() || !y.has_blocks() {
            return Ok(0.0);
        }
        let w = self.kernel.g0_finite()? * 0.5;
        Ok(w * x.blocks().iter().zip(y.blocks()).map(|(a, b)| a * b).sum::<f64>())
    }

    /// `∫∫ G(|t - s|) dX_s dX_t`, extended so that a singular kernel with
    /// blocks reports `+inf` instead of an error.
    pub fn energy(&self, x: &Strategy) -> Result<Extended> {
        if self.kernel.is_singular() && x.has_blocks() {
            return Ok(Extended::PosInfinity);
        }
        self.symmetric(x, x).map(Extended::Finite)
    }
}
