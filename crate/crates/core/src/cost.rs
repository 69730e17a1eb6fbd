//! Expected execution cost of a trader.
//!
//! With the unaffected price a martingale, its contributions cancel in
//! expectation and the objective of trader `i` against opponents `j != i` is
//!
//! ```text
//! J(X^i; X^-i) = 1/2 ∫∫ G(|t-s|) dX^i_s dX^i_t
//!              + sum_j ∫_0^T ∫_0^{t-} G(t-s) dX^j_s dX^i_t
//!              + (G(0)/2) sum_j sum_t ΔX^j_t ΔX^i_t
//!              + C(X^i)
//! ```
//!
//! where `C` is the quadratic cost
//! `(eps/2) ∫ Ẋ² dt + 1/2 sum_t theta_t (ΔX_t)² + (phi/2) X_T²`, or the
//! hard constraint `X_T = 0` when liquidation is enforced. Randomized
//! strategies are evaluated by exact enumeration over the (independent)
//! devices of all traders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::forms::QuadraticForms;
use crate::impact;
use crate::kernels::Kernel;
use crate::strategy::{RandomizedStrategy, Strategy, TradingGrid};

/// Default cap on the number of scenario combinations enumerated exactly.
pub const ENUMERATION_CAP: u128 = 1_000_000;

/// `|X_T|` below `LIQUIDATION_TOL * max(1, |x0| + TV(X))` counts as liquidated.
pub const LIQUIDATION_TOL: f64 = 1e-9;

/// Quadratic cost weights on block trades, per grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockCost {
    Uniform(f64),
    PerTime(Vec<f64>),
}

impl BlockCost {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            BlockCost::Uniform(v) => *v,
            BlockCost::PerTime(v) => v[k],
        }
    }
}

/// Treatment of the terminal inventory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// `(phi/2) X_T²` with finite `phi >= 0`.
    Penalty(f64),
    /// `X_T = 0` enforced (`phi = inf`).
    Liquidate,
}

/// Additional trading cost `C` of one trader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub epsilon: f64,
    pub theta: BlockCost,
    pub terminal: Terminal,
    /// When set, trading is only allowed by blocks at these grid indices;
    /// anything else costs `+inf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trading_dates: Option<Vec<usize>>,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl CostSpec {
    /// `C ≡ 0`.
    pub fn zero() -> Self {
        Self {
            epsilon: 0.0,
            theta: BlockCost::Uniform(0.0),
            terminal: Terminal::Penalty(0.0),
            trading_dates: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = BlockCost::Uniform(theta);
        self
    }

    pub fn with_theta_per_time(mut self, theta: Vec<f64>) -> Self {
        self.theta = BlockCost::PerTime(theta);
        self
    }

    pub fn with_penalty(mut self, phi: f64) -> Self {
        self.terminal = Terminal::Penalty(phi);
        self
    }

    pub fn liquidating(mut self) -> Self {
        self.terminal = Terminal::Liquidate;
        self
    }

    pub fn with_trading_dates(mut self, dates: Vec<usize>) -> Self {
        self.trading_dates = Some(dates);
        self
    }

    pub fn liquidates(&self) -> bool {
        matches!(self.terminal, Terminal::Liquidate)
    }

    pub fn phi(&self) -> Option<f64> {
        match self.terminal {
            Terminal::Penalty(phi) => Some(phi),
            Terminal::Liquidate => None,
        }
    }

    pub fn block_allowed(&self, k: usize) -> bool {
        self.trading_dates.as_ref().is_none_or(|d| d.contains(&k))
    }

    pub fn validate(&self, grid: &TradingGrid) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("epsilon", self.epsilon)?;
        match &self.theta {
            BlockCost::Uniform(v) => nonneg("theta", *v)?,
            BlockCost::PerTime(v) => {
                if v.len() != grid.times().len() {
                    return Err(Error::Structural(format!(
                        "theta has {} entries for {} grid times",
                        v.len(),
                        grid.times().len()
                    )));
                }
                for &x in v {
                    nonneg("theta", x)?;
                }
            }
        }
        if let Terminal::Penalty(phi) = self.terminal {
            nonneg("phi", phi)?;
        }
        if let Some(d) = &self.trading_dates {
            if d.iter().any(|&k| k > grid.intervals()) {
                return Err(Error::Domain("trading date index beyond the grid".into()));
            }
        }
        Ok(())
    }
}

/// `∫∫ G(|t - s|) dX_s dX_t` (without the factor 1/2).
pub fn self_quadratic_form(kernel: &Kernel, x: &Strategy) -> Result<f64> {
    QuadraticForms::new(kernel, x.grid())?.symmetric(x, x)
}

/// `∫_0^T ∫_0^{t-} G(t-s) dX^j_s dX^i_t + (G(0)/2) sum_t ΔX^j_t ΔX^i_t`:
/// the impact cost inflicted on trader `i` by trader `j`.
pub fn cross_term(kernel: &Kernel, x_i: &Strategy, x_j: &Strategy) -> Result<f64> {
    let forms = QuadraticForms::new(kernel, x_i.grid())?;
    Ok(forms.ordered(x_j, x_i)? + forms.simultaneous(x_j, x_i)?)
}

/// `C(X)` for the quadratic family; `+inf` when the strategy leaves the
/// cost's domain.
pub fn additional_cost(spec: &CostSpec, x: &Strategy) -> Result<Extended> {
    let grid = x.grid();
    spec.validate(grid)?;
    if spec.trading_dates.is_some() {
        let off_grid = x.has_rates()
            || x.blocks()
                .iter()
                .enumerate()
                .any(|(k, &b)| b != 0.0 && !spec.block_allowed(k));
        if off_grid {
            return Ok(Extended::PosInfinity);
        }
    }
    if spec.epsilon > 0.0 && x.has_blocks() {
        // no trading rate exists for a path with jumps
        return Ok(Extended::PosInfinity);
    }
    let rate_cost: f64 = x
        .rates()
        .iter()
        .enumerate()
        .map(|(m, r)| r * r * grid.interval_length(m))
        .sum::<f64>()
        * 0.5
        * spec.epsilon;
    let block_cost: f64 = x
        .blocks()
        .iter()
        .enumerate()
        .map(|(k, b)| spec.theta.at(k) * b * b)
        .sum::<f64>()
        * 0.5;
    let terminal = x.terminal();
    let terminal_cost = match spec.terminal {
        Terminal::Penalty(phi) => 0.5 * phi * terminal * terminal,
        Terminal::Liquidate => {
            let scale = (x.x0().abs() + x.total_variation()).max(1.0);
            if terminal.abs() > LIQUIDATION_TOL * scale {
                return Ok(Extended::PosInfinity);
            }
            0.0
        }
    };
    Ok(Extended::Finite(rate_cost + block_cost + terminal_cost))
}

/// The terms of `J` for one deterministic profile (or their expectations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    /// `1/2 ∫∫ G dX^i dX^i`.
    pub self_impact: f64,
    /// Ordered plus simultaneous cross terms summed over opponents.
    pub cross_impact: f64,
    pub additional: Extended,
    pub total: Extended,
}

impl ObjectiveTerms {
    fn new(self_impact: f64, cross_impact: f64, additional: Extended) -> Self {
        Self {
            self_impact,
            cross_impact,
            additional,
            total: additional + (self_impact + cross_impact),
        }
    }
}

/// Reusable evaluator over a fixed kernel and grid.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    forms: QuadraticForms,
}

impl CostEvaluator {
    pub fn new(kernel: &Kernel, grid: &TradingGrid) -> Result<Self> {
        Ok(Self {
            forms: QuadraticForms::new(kernel, grid)?,
        })
    }

    pub fn forms(&self) -> &QuadraticForms {
        &self.forms
    }

    pub fn self_quadratic_form(&self, x: &Strategy) -> Result<f64> {
        self.forms.symmetric(x, x)
    }

    pub fn cross_term(&self, x_i: &Strategy, x_j: &Strategy) -> Result<f64> {
        Ok(self.forms.ordered(x_j, x_i)? + self.forms.simultaneous(x_j, x_i)?)
    }

    pub fn terms(&self, spec: &CostSpec, x_i: &Strategy, others: &[&Strategy]) -> Result<ObjectiveTerms> {
        let self_impact = 0.5 * self.self_quadratic_form(x_i)?;
        let mut cross = 0.0;
        for x_j in others {
            cross += self.cross_term(x_i, x_j)?;
        }
        Ok(ObjectiveTerms::new(self_impact, cross, additional_cost(spec, x_i)?))
    }

    pub fn objective(&self, spec: &CostSpec, x_i: &Strategy, others: &[&Strategy]) -> Result<Extended> {
        Ok(self.terms(spec, x_i, others)?.total)
    }

    /// Expected terms by brute-force enumeration of the product of all
    /// scenario measures.
    pub fn randomized_terms(
        &self,
        spec: &CostSpec,
        r_i: &RandomizedStrategy,
        r_others: &[&RandomizedStrategy],
        cap: u128,
    ) -> Result<ObjectiveTerms> {
        let combos = r_others
            .iter()
            .fold(r_i.len() as u128, |acc, r| acc.saturating_mul(r.len() as u128));
        if combos > cap {
            return Err(Error::EnumerationCap { combinations: combos, cap });
        }
        let mut self_impact = 0.0;
        let mut cross = 0.0;
        let mut additional = Extended::ZERO;
        let mut idx = vec![0usize; r_others.len()];
        loop {
            let mut p_others = 1.0;
            let drawn: Vec<&Strategy> = r_others
                .iter()
                .zip(&idx)
                .map(|(r, &m)| {
                    p_others *= r.weights()[m];
                    &r.scenarios()[m]
                })
                .collect();
            for (p, x) in r_i.iter() {
                let t = self.terms(spec, x, &drawn)?;
                let w = p * p_others;
                self_impact += w * t.self_impact;
                cross += w * t.cross_impact;
                additional = additional + t.additional.scale(w);
            }
            // advance the mixed-radix counter
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return Ok(ObjectiveTerms::new(self_impact, cross, additional));
                }
                idx[pos] += 1;
                if idx[pos] < r_others[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// `J(X^i; X^-i)`.
pub fn objective(kernel: &Kernel, spec: &CostSpec, x_i: &Strategy, others: &[&Strategy]) -> Result<Extended> {
    CostEvaluator::new(kernel, x_i.grid())?.objective(spec, x_i, others)
}

/// `J` with its term breakdown.
pub fn objective_terms(
    kernel: &Kernel,
    spec: &CostSpec,
    x_i: &Strategy,
    others: &[&Strategy],
) -> Result<ObjectiveTerms> {
    CostEvaluator::new(kernel, x_i.grid())?.terms(spec, x_i, others)
}

/// `E[J]` over independent randomization devices, enumerated exactly.
pub fn objective_randomized(
    kernel: &Kernel,
    spec: &CostSpec,
    r_i: &RandomizedStrategy,
    r_others: &[&RandomizedStrategy],
) -> Result<Extended> {
    Ok(CostEvaluator::new(kernel, r_i.grid())?
        .randomized_terms(spec, r_i, r_others, ENUMERATION_CAP)?
        .total)
}

/// Cost of a randomized strategy versus its scenario average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub j_randomized: Extended,
    pub j_derandomized: Extended,
    /// `j_randomized - j_derandomized`; `+inf` when only the randomized
    /// cost is infinite.
    pub gap: Extended,
    /// `sum_k p_k 1/2 ∫∫ G dD_k dD_k` with `D_k = X_k - E[X]`.
    pub predicted_kernel_gap: f64,
    /// The gap is strictly positive.
    pub strict: bool,
}

/// How much trader `i` saves by replacing `r_i` with its scenario average,
/// opponents held fixed.
pub fn derandomization_gap(
    kernel: &Kernel,
    spec: &CostSpec,
    r_i: &RandomizedStrategy,
    r_others: &[&RandomizedStrategy],
) -> Result<GapReport> {
    let eval = CostEvaluator::new(kernel, r_i.grid())?;
    let averaged = r_i.derandomize();
    let j_randomized = eval.randomized_terms(spec, r_i, r_others, ENUMERATION_CAP)?.total;
    let j_derandomized = eval
        .randomized_terms(
            spec,
            &RandomizedStrategy::deterministic(averaged.clone()),
            r_others,
            ENUMERATION_CAP,
        )?
        .total;
    let mut predicted = 0.0;
    for (p, x) in r_i.iter() {
        let d = x.difference(&averaged)?;
        predicted += p * 0.5 * eval.self_quadratic_form(&d)?;
    }
    let gap = match (j_randomized, j_derandomized) {
        (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a - b),
        (Extended::PosInfinity, Extended::Finite(_)) => Extended::PosInfinity,
        _ => {
            return Err(Error::InfiniteValue(
                "the averaged strategy has infinite cost; the gap is undefined".into(),
            ))
        }
    };
    let strict = match gap {
        Extended::Finite(g) => g > 0.0,
        Extended::PosInfinity => true,
    };
    Ok(GapReport {
        j_randomized,
        j_derandomized,
        gap,
        predicted_kernel_gap: predicted,
        strict,
    })
}

/// `|1/2 ∫∫ G(|t-s|) dM dM - (∫∫_{s<t} G(t-s) dM dM + (G(0)/2) sum (ΔM)²)|`.
///
/// The left side comes from the closed-form double integrals, the ordered
/// integral on the right from pointwise impact integrated by quadrature.
pub fn fubini_identity_residual(kernel: &Kernel, m: &Strategy) -> Result<f64> {
    if kernel.is_singular() {
        return Err(Error::Domain("the identity check needs a bounded kernel".into()));
    }
    let lhs = 0.5 * self_quadratic_form(kernel, m)?;
    let ordered = impact::ordered_by_impact(kernel, m, m)?;
    let g0 = kernel.g0_finite()?;
    let jumps: f64 = m.blocks().iter().map(|b| b * b).sum::<f64>() * 0.5 * g0;
    Ok((lhs - ordered - jumps).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp11() -> Kernel {
        Kernel::exponential(1.0, 1.0).unwrap()
    }

    fn g01() -> TradingGrid {
        TradingGrid::new(vec![0.0, 1.0]).unwrap()
    }

    fn blocks(x0: f64, b: &[f64]) -> Strategy {
        Strategy::from_blocks(x0, g01(), b.to_vec()).unwrap()
    }

    const E1: f64 = 0.36787944117144233;

    #[test]
    fn self_form_examples() {
        assert_eq!(self_quadratic_form(&exp11(), &blocks(0.0, &[1.0, 0.0])).unwrap(), 1.0);
        let v = self_quadratic_form(&exp11(), &blocks(0.0, &[1.0, -1.0])).unwrap();
        assert!((v - (2.0 - 2.0 * E1)).abs() < 1e-15);
        assert_eq!(self_quadratic_form(&exp11(), &blocks(3.0, &[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn cross_term_examples() {
        let early = blocks(0.0, &[1.0, 0.0]);
        let late = blocks(0.0, &[0.0, 1.0]);
        assert!((cross_term(&exp11(), &late, &early).unwrap() - E1).abs() < 1e-16);
        assert_eq!(cross_term(&exp11(), &early, &late).unwrap(), 0.0);
        assert_eq!(cross_term(&exp11(), &early, &early).unwrap(), 0.5);
        assert_eq!(cross_term(&exp11(), &blocks(0.0, &[0.0, 0.0]), &early).unwrap(), 0.0);
    }

    #[test]
    fn additional_cost_examples() {
        let spec = CostSpec::zero().with_theta(1.0);
        assert_eq!(additional_cost(&spec, &blocks(0.0, &[2.0, 0.0])).unwrap(), Extended::Finite(2.0));

        let rate = Strategy::from_rates(0.0, g01(), vec![3.0]).unwrap();
        let spec = CostSpec::zero().with_epsilon(2.0);
        assert_eq!(additional_cost(&spec, &rate).unwrap(), Extended::Finite(9.0));

        let spec = CostSpec::zero().liquidating();
        assert_eq!(additional_cost(&spec, &blocks(1.0, &[-0.5, 0.0])).unwrap(), Extended::PosInfinity);
        assert_eq!(additional_cost(&spec, &blocks(1.0, &[-0.5, -0.5])).unwrap(), Extended::Finite(0.0));

        let spec = CostSpec::zero().with_epsilon(1.0);
        assert_eq!(additional_cost(&spec, &blocks(0.0, &[1.0, 0.0])).unwrap(), Extended::PosInfinity);

        let spec = CostSpec::zero().with_penalty(4.0);
        assert_eq!(additional_cost(&spec, &blocks(1.0, &[-0.5, 0.0])).unwrap(), Extended::Finite(0.5));
    }

    #[test]
    fn trading_dates_restrict_the_domain() {
        let spec = CostSpec::zero().with_theta(1.0).with_trading_dates(vec![1]);
        assert_eq!(additional_cost(&spec, &blocks(0.0, &[1.0, 0.0])).unwrap(), Extended::PosInfinity);
        assert_eq!(additional_cost(&spec, &blocks(0.0, &[0.0, 1.0])).unwrap(), Extended::Finite(0.5));
        let rate = Strategy::from_rates(0.0, g01(), vec![1.0]).unwrap();
        assert_eq!(additional_cost(&spec, &rate).unwrap(), Extended::PosInfinity);
    }

    #[test]
    fn objective_examples() {
        let k = exp11();
        let c0 = CostSpec::zero();
        assert_eq!(objective(&k, &c0, &blocks(0.0, &[2.0, 0.0]), &[]).unwrap(), Extended::Finite(2.0));
        let zero = blocks(0.0, &[0.0, 0.0]);
        let other = blocks(0.0, &[-3.0, 1.0]);
        assert_eq!(objective(&k, &c0, &zero, &[&other]).unwrap(), Extended::Finite(0.0));
        let b = blocks(0.0, &[1.0, 0.0]);
        assert_eq!(objective(&k, &c0, &b, &[&b]).unwrap(), Extended::Finite(1.0));
    }

    #[test]
    fn randomized_objective_examples() {
        let k = exp11();
        let c0 = CostSpec::zero();
        let a = blocks(0.0, &[1.0, 0.0]);
        let b = blocks(0.0, &[0.0, 1.0]);
        let mix = RandomizedStrategy::new(vec![(0.5, a.clone()), (0.5, b.clone())]).unwrap();
        let v = objective_randomized(&k, &c0, &mix, &[]).unwrap().as_option().unwrap();
        assert!((v - 0.5).abs() < 1e-15);

        let det = RandomizedStrategy::deterministic(a.clone());
        let det_o = RandomizedStrategy::deterministic(b.clone());
        assert_eq!(
            objective_randomized(&k, &c0, &det, &[&det_o]).unwrap(),
            objective(&k, &c0, &a, &[&b]).unwrap()
        );

        // opponents randomized: equals playing against their average
        let x_i = Strategy::from_blocks(0.0, g01(), vec![-0.3, 0.8]).unwrap();
        let reduced = objective(&k, &c0, &x_i, &[&mix.derandomize()]).unwrap().as_option().unwrap();
        let full = objective_randomized(&k, &c0, &RandomizedStrategy::deterministic(x_i), &[&mix])
            .unwrap()
            .as_option()
            .unwrap();
        assert!((full - reduced).abs() < 1e-15);
    }

    #[test]
    fn gap_examples() {
        let k = exp11();
        let a = blocks(0.0, &[1.0, 0.0]);
        let b = blocks(0.0, &[0.0, 1.0]);
        let mix = RandomizedStrategy::new(vec![(0.5, a.clone()), (0.5, b)]).unwrap();
        let expect = (1.0 - E1) / 4.0;
        let rep = derandomization_gap(&k, &CostSpec::zero(), &mix, &[]).unwrap();
        assert!((rep.gap.as_option().unwrap() - expect).abs() < 1e-15);
        assert!((rep.predicted_kernel_gap - expect).abs() < 1e-15);
        assert!(rep.strict);

        let single = RandomizedStrategy::deterministic(a);
        let rep = derandomization_gap(&k, &CostSpec::zero(), &single, &[]).unwrap();
        assert_eq!(rep.gap, Extended::Finite(0.0));
        assert!(!rep.strict);

        let rep = derandomization_gap(&k, &CostSpec::zero().with_theta(1.0), &mix, &[]).unwrap();
        assert!(rep.gap.as_option().unwrap() >= expect);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let k = exp11();
        let a = blocks(0.0, &[1.0, 0.0]);
        let b = blocks(0.0, &[0.0, 1.0]);
        let mix = RandomizedStrategy::new(vec![(0.5, a), (0.5, b)]).unwrap();
        let eval = CostEvaluator::new(&k, &g01()).unwrap();
        let err = eval.randomized_terms(&CostSpec::zero(), &mix, &[&mix, &mix], 7).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { combinations: 8, cap: 7 }));
    }

    #[test]
    fn fubini_examples() {
        let k = exp11();
        let g = TradingGrid::new(vec![0.0, 0.2, 0.5, 0.9, 1.4]).unwrap();
        let m = Strategy::from_blocks(0.0, g.clone(), vec![0.7, -1.2, 0.4, 2.0, -0.1]).unwrap();
        assert!(fubini_identity_residual(&k, &m).unwrap() < 1e-12);
        assert_eq!(fubini_identity_residual(&k, &Strategy::constant(0.0, g.clone())).unwrap(), 0.0);
        let tpl = Kernel::truncated_power_law(1.0, 1.0, 2.0).unwrap();
        let r = Strategy::from_rates(0.0, g, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(fubini_identity_residual(&tpl, &r).unwrap() < 1e-10);
    }

    #[test]
    fn singular_objective_rejects_blocks() {
        let k = Kernel::singular_power_law(0.5).unwrap();
        let err = objective(&k, &CostSpec::zero(), &blocks(1.0, &[-1.0, 0.0]), &[]).unwrap_err();
        assert!(matches!(err, Error::Admissibility(_)));
    }
}
