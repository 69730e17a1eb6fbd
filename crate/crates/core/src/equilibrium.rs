//! Nash equilibria of the grid game.
//!
//! On a fixed grid each trader's expected cost is a quadratic function of
//! their own decision vector `d_i` (the active entries of the stacked
//! `[blocks, rates]` layout):
//!
//! ```text
//! J_i = 1/2 d_i' Q_i d_i + d_i' sum_{j != i} L_ij d_j + c_i' d_i + const_i
//! ```
//!
//! `Q_i` is the kernel Gram form plus the quadratic cost terms, `L_ij` the
//! ordered-plus-simultaneity cross form. Liquidation adds the constraint
//! `a_i' d_i = -x0_i`, where `a_i` maps decisions to net trade. Stacking the
//! first-order conditions of all traders gives one linear KKT system, whose
//! unique solution (when the system is nonsingular) is the equilibrium.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{BlockCost, CostEvaluator, CostSpec, Terminal};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::forms::QuadraticForms;
use crate::kernels::{Kernel, PD_PIVOT_TOL};
use crate::linalg::{ldlt_pivots, LuFactor};
use crate::strategy::{Strategy, TradingGrid};

/// A profile is converged when no trader moves by this much in max-norm.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Largest suboptimality still accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
/// Relative pivot below which a KKT system counts as singular.
pub const KKT_PIVOT_TOL: f64 = 1e-14;
pub const DEFAULT_DAMPING: f64 = 0.5;
/// A sweep moving the profile this far stops the iteration as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e100;

/// Which grid trades a trader may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyClass {
    Blocks,
    Rates,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderSpec {
    pub x0: f64,
    pub cost: CostSpec,
}

impl TraderSpec {
    pub fn new(x0: f64, cost: CostSpec) -> Self {
        Self { x0, cost }
    }
}

#[derive(Debug, Clone)]
pub struct GameSpec {
    pub kernel: Kernel,
    pub grid: TradingGrid,
    pub traders: Vec<TraderSpec>,
    pub class: StrategyClass,
}

impl GameSpec {
    pub fn new(kernel: Kernel, grid: TradingGrid, traders: Vec<TraderSpec>, class: StrategyClass) -> Result<Self> {
        let game = Self {
            kernel,
            grid,
            traders,
            class,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn n_traders(&self) -> usize {
        self.traders.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.traders.is_empty() {
            return Err(Error::Structural("a game needs at least one trader".into()));
        }
        if self.kernel.is_singular() && self.class == StrategyClass::Blocks {
            return Err(Error::Structural(
                "block decision variables under a singular kernel".into(),
            ));
        }
        for (i, t) in self.traders.iter().enumerate() {
            if !t.x0.is_finite() {
                return Err(Error::Domain(format!("trader {i}: x0 must be finite")));
            }
            t.cost.validate(&self.grid)?;
            if t.cost.liquidates() && t.x0 != 0.0 && self.active_variables(i).is_empty() {
                return Err(Error::Structural(format!(
                    "trader {i} must liquidate but has no admissible decision variables"
                )));
            }
        }
        Ok(())
    }

    /// Stacked indices of trader `i`'s decision variables.
    ///
    /// Blocks are dropped under a singular kernel or when `epsilon > 0`
    /// (they would cost `+inf`); a trading-date restriction keeps only the
    /// listed blocks and no rates.
    pub fn active_variables(&self, i: usize) -> Vec<usize> {
        let cost = &self.traders[i].cost;
        let n = self.grid.intervals();
        let blocks = self.class != StrategyClass::Rates && self.kernel.is_bounded() && cost.epsilon == 0.0;
        let rates = self.class != StrategyClass::Blocks && cost.trading_dates.is_none();
        let mut active = Vec::new();
        if blocks {
            active.extend((0..=n).filter(|&k| cost.block_allowed(k)).map(|k| self.grid.block_index(k)));
        }
        if rates {
            active.extend((0..n).map(|m| self.grid.rate_index(m)));
        }
        active
    }

    /// The same game on another grid. Grid-dependent cost data must not be
    /// present.
    pub fn with_grid(&self, grid: TradingGrid) -> Result<Self> {
        for (i, t) in self.traders.iter().enumerate() {
            if matches!(t.cost.theta, BlockCost::PerTime(_)) || t.cost.trading_dates.is_some() {
                return Err(Error::Structural(format!(
                    "trader {i} has per-grid-time cost data and cannot be moved to another grid"
                )));
            }
        }
        Self::new(self.kernel, grid, self.traders.clone(), self.class)
    }
}

/// Trader `i`'s cost as a quadratic in the decision vectors.
#[derive(Debug, Clone)]
pub struct DecisionForm {
    /// Stacked indices of the decision variables.
    pub active: Vec<usize>,
    pub q: DMatrix<f64>,
    /// `L_ij` for every `j`; `L_ii` is zero.
    pub cross: Vec<DMatrix<f64>>,
    pub c: DVector<f64>,
    pub constant: f64,
    /// Net trade per unit of each decision variable: 1 for blocks, the
    /// interval length for rates.
    pub terminal_gradient: DVector<f64>,
    pub liquidation: bool,
}

impl DecisionForm {
    /// `1/2 d' Q d + d' sum_j L_ij d_j + c' d + const`, with `profile[i]`
    /// ignored.
    pub fn value(&self, own: &DVector<f64>, profile: &[DVector<f64>]) -> f64 {
        let mut v = 0.5 * own.dot(&(&self.q * own)) + self.c.dot(own) + self.constant;
        for (l, d_j) in self.cross.iter().zip(profile) {
            if l.ncols() > 0 && l.nrows() > 0 {
                v += own.dot(&(l * d_j));
            }
        }
        v
    }
}

/// Assembled game with cached per-trader factorizations.
pub struct GameSolver {
    game: GameSpec,
    evaluator: CostEvaluator,
    cross: DMatrix<f64>,
    forms: Vec<DecisionForm>,
    responders: Vec<OnceLock<Result<LuFactor>>>,
}

impl GameSolver {
    pub fn new(game: &GameSpec) -> Result<Self> {
        game.validate()?;
        let evaluator = CostEvaluator::new(&game.kernel, &game.grid)?;
        let cross = evaluator.forms().cross_matrix();
        let active: Vec<Vec<usize>> = (0..game.n_traders()).map(|i| game.active_variables(i)).collect();
        let forms = (0..game.n_traders())
            .map(|i| assemble(game, evaluator.forms(), &cross, &active, i))
            .collect();
        Ok(Self {
            game: game.clone(),
            evaluator,
            cross,
            forms,
            responders: (0..game.n_traders()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn decision_form(&self, i: usize) -> &DecisionForm {
        &self.forms[i]
    }

    /// Active entries of `s`; entries outside the active set are dropped.
    pub fn decision_vector(&self, i: usize, s: &Strategy) -> DVector<f64> {
        let stacked = s.stacked();
        DVector::from_iterator(self.forms[i].active.len(), self.forms[i].active.iter().map(|&a| stacked[a]))
    }

    pub fn strategy(&self, i: usize, d: &DVector<f64>) -> Result<Strategy> {
        let mut stacked = vec![0.0; self.game.grid.stacked_len()];
        for (&a, &v) in self.forms[i].active.iter().zip(d.iter()) {
            stacked[a] = v;
        }
        Strategy::from_stacked(self.game.traders[i].x0, self.game.grid.clone(), &stacked)
    }

    fn check_profile(&self, profile: &[Strategy]) -> Result<()> {
        if profile.len() != self.game.n_traders() {
            return Err(Error::Structural(format!(
                "profile has {} strategies for {} traders",
                profile.len(),
                self.game.n_traders()
            )));
        }
        for s in profile {
            self.evaluator.forms().check(s)?;
        }
        Ok(())
    }

    /// Linear term `sum_{j != i} L_ij X_j` from full opponent strategies.
    fn opponent_term(&self, i: usize, profile: &[Strategy]) -> DVector<f64> {
        let dim = self.game.grid.stacked_len();
        let mut y = vec![0.0; dim];
        for (j, s) in profile.iter().enumerate() {
            if j != i {
                for (acc, v) in y.iter_mut().zip(s.stacked()) {
                    *acc += v;
                }
            }
        }
        let active = &self.forms[i].active;
        DVector::from_iterator(
            active.len(),
            active.iter().map(|&a| (0..dim).map(|b| self.cross[(b, a)] * y[b]).sum::<f64>()),
        )
    }

    fn responder(&self, i: usize) -> Result<&LuFactor> {
        self.responders[i]
            .get_or_init(|| {
                let f = &self.forms[i];
                let n = f.active.len();
                let m = n + usize::from(f.liquidation);
                let mut k = DMatrix::zeros(m, m);
                k.view_mut((0, 0), (n, n)).copy_from(&f.q);
                if f.liquidation {
                    for r in 0..n {
                        k[(r, n)] = f.terminal_gradient[r];
                        k[(n, r)] = f.terminal_gradient[r];
                    }
                }
                LuFactor::new(k, KKT_PIVOT_TOL)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Gradient of `J_i` in trader `i`'s decision variables, without any
    /// constraint multiplier.
    pub fn gradient(&self, i: usize, profile: &[Strategy]) -> Result<DVector<f64>> {
        self.check_profile(profile)?;
        let f = &self.forms[i];
        let d = self.decision_vector(i, &profile[i]);
        Ok(&f.q * d + &f.c + self.opponent_term(i, profile))
    }

    /// Decision vector and liquidation multiplier of trader `i`'s best
    /// response; `profile[i]` is ignored.
    pub fn best_response_vector(&self, i: usize, profile: &[Strategy]) -> Result<(DVector<f64>, Option<f64>)> {
        self.check_profile(profile)?;
        let f = &self.forms[i];
        let n = f.active.len();
        if n == 0 {
            return Ok((DVector::zeros(0), None));
        }
        let lin = &f.c + self.opponent_term(i, profile);
        let mut rhs = DVector::zeros(n + usize::from(f.liquidation));
        rhs.rows_mut(0, n).copy_from(&(-lin));
        if f.liquidation {
            rhs[n] = -self.game.traders[i].x0;
        }
        let z = self.responder(i)?.solve(&rhs)?;
        let mu = f.liquidation.then(|| z[n]);
        Ok((z.rows(0, n).into_owned(), mu))
    }

    pub fn best_response(&self, i: usize, profile: &[Strategy]) -> Result<Strategy> {
        let (d, _) = self.best_response_vector(i, profile)?;
        self.strategy(i, &d)
    }

    /// Minimum relative `L D L'` pivot of each `Q_i` on its feasible
    /// subspace (the null space of `a_i'` for liquidating traders).
    pub fn second_order_pivots(&self) -> Vec<f64> {
        self.forms
            .iter()
            .map(|f| {
                let h = reduced_hessian(f);
                if h.nrows() == 0 {
                    return f64::INFINITY;
                }
                let scale = (0..h.nrows()).map(|r| h[(r, r)].abs()).fold(0.0, f64::max);
                let pivots = ldlt_pivots(&h, PD_PIVOT_TOL);
                let min = pivots.iter().copied().fold(f64::INFINITY, f64::min);
                if pivots.len() < h.nrows() {
                    min.min(0.0)
                } else {
                    min / scale
                }
            })
            .collect()
    }

    pub fn solve(&self) -> Result<EquilibriumResult> {
        for (i, p) in self.second_order_pivots().into_iter().enumerate() {
            if !(p > PD_PIVOT_TOL) {
                return Err(Error::numerical(
                    format!("trader {i}: cost is not strictly convex on the feasible set"),
                    p,
                ));
            }
        }
        let sizes: Vec<usize> = self.forms.iter().map(|f| f.active.len()).collect();
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        let n_vars: usize = sizes.iter().sum();
        let liquidating: Vec<usize> = (0..self.forms.len())
            .filter(|&i| self.forms[i].liquidation && sizes[i] > 0)
            .collect();
        let dim = n_vars + liquidating.len();

        let mut k = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for (i, f) in self.forms.iter().enumerate() {
            let (oi, ni) = (offsets[i], sizes[i]);
            k.view_mut((oi, oi), (ni, ni)).copy_from(&f.q);
            for (j, l) in f.cross.iter().enumerate() {
                if j != i {
                    k.view_mut((oi, offsets[j]), (ni, sizes[j])).copy_from(l);
                }
            }
            rhs.rows_mut(oi, ni).copy_from(&(-&f.c));
        }
        for (p, &i) in liquidating.iter().enumerate() {
            let row = n_vars + p;
            let a = &self.forms[i].terminal_gradient;
            for r in 0..sizes[i] {
                k[(offsets[i] + r, row)] = a[r];
                k[(row, offsets[i] + r)] = a[r];
            }
            rhs[row] = -self.game.traders[i].x0;
        }

        let (z, min_pivot) = if dim == 0 {
            (DVector::zeros(0), f64::INFINITY)
        } else {
            let lu = LuFactor::new(k.clone(), KKT_PIVOT_TOL)?;
            let mut z = lu.solve(&rhs)?;
            // one step of iterative refinement
            let r = &rhs - &k * &z;
            z += lu.solve(&r)?;
            (z, lu.min_pivot)
        };

        let decisions: Vec<DVector<f64>> = (0..self.forms.len())
            .map(|i| z.rows(offsets[i], sizes[i]).into_owned())
            .collect();
        let profile = decisions
            .iter()
            .enumerate()
            .map(|(i, d)| self.strategy(i, d))
            .collect::<Result<Vec<_>>>()?;
        let mut multipliers = vec![None; self.forms.len()];
        for (p, &i) in liquidating.iter().enumerate() {
            multipliers[i] = Some(z[n_vars + p]);
        }

        let mut foc_residual: f64 = 0.0;
        for (i, f) in self.forms.iter().enumerate() {
            let mut g = self.gradient(i, &profile)?;
            if let Some(mu) = multipliers[i] {
                g += &f.terminal_gradient * mu;
                foc_residual = foc_residual.max((f.terminal_gradient.dot(&decisions[i]) + self.game.traders[i].x0).abs());
            }
            foc_residual = foc_residual.max(g.amax());
        }
        let scale = k.amax().max(1.0) * z.amax().max(1.0);
        if foc_residual > EQUILIBRIUM_TOL * scale {
            return Err(Error::numerical("KKT solution does not meet the stationarity tolerance", foc_residual));
        }

        let verification = self.verify(&profile)?;
        let objectives = profile
            .iter()
            .enumerate()
            .map(|(i, _)| self.objective(i, &profile))
            .collect::<Result<Vec<_>>>()?;
        Ok(EquilibriumResult {
            profile,
            multipliers,
            foc_residual,
            min_pivot,
            br_verified: verification.is_equilibrium,
            suboptimality: verification.suboptimality,
            objectives,
        })
    }

    /// `J_i` of the profile through the cost engine.
    pub fn objective(&self, i: usize, profile: &[Strategy]) -> Result<Extended> {
        let others: Vec<&Strategy> = profile.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| s).collect();
        self.evaluator.objective(&self.game.traders[i].cost, &profile[i], &others)
    }

    pub fn verify(&self, profile: &[Strategy]) -> Result<Verification> {
        self.check_profile(profile)?;
        let mut suboptimality = Vec::with_capacity(profile.len());
        for i in 0..profile.len() {
            let current = self.objective(i, profile)?;
            let mut deviated = profile.to_vec();
            deviated[i] = self.best_response(i, profile)?;
            let best = self.objective(i, &deviated)?.finite("best-response objective")?;
            suboptimality.push(match current {
                Extended::Finite(v) => Extended::Finite(v - best),
                Extended::PosInfinity => Extended::PosInfinity,
            });
        }
        let is_equilibrium = suboptimality
            .iter()
            .all(|s| s.as_option().is_some_and(|v| v <= EQUILIBRIUM_TOL));
        Ok(Verification {
            suboptimality,
            is_equilibrium,
        })
    }

    /// Linear part `B` of the joint best-response map `d -> B d + const` in
    /// the stacked decision space.
    pub fn response_operator(&self) -> Result<DMatrix<f64>> {
        let sizes: Vec<usize> = self.forms.iter().map(|f| f.active.len()).collect();
        let total: usize = sizes.iter().sum();
        let mut offsets = vec![0; sizes.len()];
        for i in 1..sizes.len() {
            offsets[i] = offsets[i - 1] + sizes[i - 1];
        }
        let mut b = DMatrix::zeros(total, total);
        for (i, f) in self.forms.iter().enumerate() {
            let n = sizes[i];
            if n == 0 {
                continue;
            }
            let lu = self.responder(i)?;
            for (j, l) in f.cross.iter().enumerate() {
                for col in 0..sizes[j] {
                    if j == i {
                        continue;
                    }
                    let mut rhs = DVector::zeros(n + usize::from(f.liquidation));
                    rhs.rows_mut(0, n).copy_from(&(-l.column(col)));
                    let z = lu.solve(&rhs)?;
                    b.view_mut((offsets[i], offsets[j] + col), (n, 1)).copy_from(&z.rows(0, n));
                }
            }
        }
        Ok(b)
    }

    /// Damping analysis of the sweeps. With `B` the response operator, a
    /// sweep multiplies errors by `I - alpha (I - B)`; it contracts iff
    /// `|1 - alpha w| < 1` for every eigenvalue `w` of `I - B`.
    pub fn damping_analysis(&self) -> Result<DampingAnalysis> {
        let b = self.response_operator()?;
        if b.nrows() == 0 {
            return Ok(DampingAnalysis {
                bound: Some(1.0),
                optimal: Some(1.0),
                contraction: Some(0.0),
            });
        }
        let w: Vec<_> = crate::linalg::eigenvalues(&b)?
            .iter()
            .map(|nu| nalgebra::Complex::new(1.0 - nu.re, -nu.im))
            .collect();
        if w.iter().any(|w| !(w.re > 0.0)) {
            return Ok(DampingAnalysis {
                bound: None,
                optimal: None,
                contraction: None,
            });
        }
        let bound = w.iter().map(|w| 2.0 * w.re / w.norm_sqr()).fold(1.0, f64::min);
        // the spectral radius is a max of convex functions of alpha
        let rho = |alpha: f64| w.iter().map(|w| (nalgebra::Complex::new(1.0, 0.0) - w * alpha).norm()).fold(0.0, f64::max);
        let (mut lo, mut hi) = (0.0, bound);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if rho(m1) <= rho(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let optimal = 0.5 * (lo + hi);
        Ok(DampingAnalysis {
            bound: Some(bound),
            optimal: Some(optimal),
            contraction: Some(rho(optimal)),
        })
    }

    pub fn iterate(&self, init: &[Strategy], alpha: f64, max_iters: usize) -> Result<IterationReport> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("damping must lie in (0, 1], got {alpha}")));
        }
        self.check_profile(init)?;
        let mut current: Vec<Strategy> = init.to_vec();
        let mut trajectory = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        for _ in 0..max_iters {
            let responses = (0..current.len())
                .map(|i| self.best_response(i, &current))
                .collect::<Result<Vec<_>>>()?;
            let mut change: f64 = 0.0;
            let mut next = Vec::with_capacity(current.len());
            for (x, br) in current.iter().zip(&responses) {
                let Ok(updated) = x.combine(1.0 - alpha, br, alpha) else {
                    // the sweep overflowed: diverged
                    trajectory.push(f64::INFINITY);
                    return Ok(IterationReport {
                        trajectory,
                        iterations,
                        converged: false,
                        profile: current,
                    });
                };
                for (u, v) in updated.stacked().iter().zip(x.stacked()) {
                    change = change.max((u - v).abs());
                }
                next.push(updated);
            }
            trajectory.push(change);
            if !(change < DIVERGENCE_BOUND) {
                break;
            }
            if change < CONVERGENCE_TOL {
                converged = true;
                break;
            }
            current = next;
            iterations += 1;
        }
        Ok(IterationReport {
            trajectory,
            iterations,
            converged,
            profile: current,
        })
    }
}

fn assemble(
    game: &GameSpec,
    forms: &QuadraticForms,
    cross: &DMatrix<f64>,
    active: &[Vec<usize>],
    i: usize,
) -> DecisionForm {
    let grid = &game.grid;
    let n_blocks = grid.intervals() + 1;
    let trader = &game.traders[i];
    let act = &active[i];
    let n = act.len();
    let sym = forms.symmetric_matrix();

    let a = DVector::from_iterator(
        n,
        act.iter().map(|&v| if v < n_blocks { 1.0 } else { grid.interval_length(v - n_blocks) }),
    );
    let mut q = DMatrix::from_fn(n, n, |r, c| sym[(act[r], act[c])]);
    for (r, &v) in act.iter().enumerate() {
        q[(r, r)] += if v < n_blocks {
            trader.cost.theta.at(v)
        } else {
            trader.cost.epsilon * grid.interval_length(v - n_blocks)
        };
    }
    let (c, constant, liquidation) = match trader.cost.terminal {
        Terminal::Penalty(phi) => {
            q += &a * a.transpose() * phi;
            (&a * (phi * trader.x0), 0.5 * phi * trader.x0 * trader.x0, false)
        }
        Terminal::Liquidate => (DVector::zeros(n), 0.0, true),
    };
    let cross_forms = active
        .iter()
        .enumerate()
        .map(|(j, act_j)| {
            if j == i {
                DMatrix::zeros(n, act_j.len())
            } else {
                DMatrix::from_fn(n, act_j.len(), |r, col| cross[(act_j[col], act[r])])
            }
        })
        .collect();
    DecisionForm {
        active: act.clone(),
        q,
        cross: cross_forms,
        c,
        constant,
        terminal_gradient: a,
        liquidation,
    }
}

/// `Z' Q Z` for a basis `Z` of the feasible directions.
fn reduced_hessian(f: &DecisionForm) -> DMatrix<f64> {
    let n = f.active.len();
    if !f.liquidation || n == 0 {
        return f.q.clone();
    }
    let a = &f.terminal_gradient;
    let p = a.iamax();
    // columns e_k - (a_k / a_p) e_p, k != p
    let mut z = DMatrix::zeros(n, n - 1);
    for (col, k) in (0..n).filter(|&k| k != p).enumerate() {
        z[(k, col)] = 1.0;
        z[(p, col)] = -a[k] / a[p];
    }
    z.transpose() * &f.q * z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// `J_i(profile) - J_i(best response)`, per trader.
    pub suboptimality: Vec<Extended>,
    pub is_equilibrium: bool,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub profile: Vec<Strategy>,
    /// Liquidation multiplier per trader; `None` for penalty traders.
    pub multipliers: Vec<Option<f64>>,
    /// Max-norm of the stationarity and constraint residuals.
    pub foc_residual: f64,
    /// Smallest |pivot| of the stacked LU factorization.
    pub min_pivot: f64,
    pub br_verified: bool,
    pub suboptimality: Vec<Extended>,
    pub objectives: Vec<Extended>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingAnalysis {
    /// Supremum of the contracting dampings in `(0, 1]`; `None` when no
    /// damping contracts.
    pub bound: Option<f64>,
    /// Damping with the smallest contraction factor.
    pub optimal: Option<f64>,
    /// Spectral radius of a sweep at `optimal`.
    pub contraction: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    /// Max-norm profile change of every sweep, including the last.
    pub trajectory: Vec<f64>,
    /// Sweeps that moved the profile by at least the convergence tolerance.
    pub iterations: usize,
    pub converged: bool,
    pub profile: Vec<Strategy>,
}

pub fn assemble_decision_form(game: &GameSpec, i: usize) -> Result<DecisionForm> {
    if i >= game.n_traders() {
        return Err(Error::Structural(format!("no trader {i}")));
    }
    Ok(GameSolver::new(game)?.forms.swap_remove(i))
}

/// Direct solve of the stacked KKT system.
pub fn solve_equilibrium(game: &GameSpec) -> Result<EquilibriumResult> {
    GameSolver::new(game)?.solve()
}

/// Trader `i`'s unique best response to `profile` (entry `i` ignored).
pub fn best_response(game: &GameSpec, i: usize, profile: &[Strategy]) -> Result<Strategy> {
    GameSolver::new(game)?.best_response(i, profile)
}

/// Damped simultaneous best-response sweeps
/// `d_i <- (1 - alpha) d_i + alpha BR_i(d)`.
pub fn best_response_iteration(
    game: &GameSpec,
    init: &[Strategy],
    alpha: f64,
    max_iters: usize,
) -> Result<IterationReport> {
    GameSolver::new(game)?.iterate(init, alpha, max_iters)
}

pub fn verify_equilibrium(game: &GameSpec, profile: &[Strategy]) -> Result<Verification> {
    GameSolver::new(game)?.verify(profile)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementRow {
    pub n: usize,
    pub total_variation: Vec<f64>,
    pub objectives: Vec<Extended>,
}

/// Equilibria of `base` on uniform grids of the given sizes over the same
/// horizon. Sizes are solved in parallel; rows keep the input order.
pub fn refinement_study(base: &GameSpec, grid_sizes: &[usize]) -> Result<Vec<RefinementRow>> {
    if base.kernel.is_singular() {
        return Err(Error::Domain("refinement studies need a bounded kernel".into()));
    }
    let horizon = base.grid.horizon();
    grid_sizes
        .par_iter()
        .map(|&n| {
            let game = base.with_grid(TradingGrid::uniform(horizon, n)?)?;
            let eq = solve_equilibrium(&game)?;
            Ok(RefinementRow {
                n,
                total_variation: eq.profile.iter().map(Strategy::total_variation).collect(),
                objectives: eq.objectives,
            })
        })
        .collect()
}

/// The zero-trade profile (every trader holds `x0`).
pub fn idle_profile(game: &GameSpec) -> Vec<Strategy> {
    game.traders
        .iter()
        .map(|t| Strategy::constant(t.x0, game.grid.clone()))
        .collect()
}
