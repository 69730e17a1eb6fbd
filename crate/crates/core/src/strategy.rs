//! Grid strategies: block trades at grid times plus constant trading rates
//! between them, and finite mixtures of such strategies.
//!
//! A [`Strategy`] on the grid `0 = t_0 < ... < t_n = T` has inventory
//!
//! ```text
//! X_t = x0 + sum_{t_k <= t} blocks[k] + ∫_0^t rate(s) ds,
//! ```
//!
//! which is càdlàg, of bounded variation and constant after `T`. The
//! *stacked* vector of a strategy is `[blocks[0..=n], rates[0..n]]`; every
//! quadratic form in the crate is indexed by it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::forms::QuadraticForms;
use crate::kernels::Kernel;

/// Weights of a randomized strategy must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Grid times `0 = t_0 < t_1 < ... < t_n = T`, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingGrid {
    times: Arc<[f64]>,
}

impl TradingGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Domain("a grid needs at least the two times 0 and T".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain(format!("grid must start at 0, got {}", times[0])));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid times must be finite and strictly increasing".into()));
        }
        Ok(Self { times: times.into() })
    }

    /// `n` equal intervals on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 || !(horizon > 0.0) {
            return Err(Error::Domain(format!(
                "uniform grid needs n >= 1 and T > 0, got n = {n}, T = {horizon}"
            )));
        }
        let mut times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        times[n] = horizon;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Number of intervals `n` (the grid has `n + 1` times).
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn interval(&self, m: usize) -> (f64, f64) {
        (self.times[m], self.times[m + 1])
    }

    pub fn interval_length(&self, m: usize) -> f64 {
        self.times[m + 1] - self.times[m]
    }

    /// Length of the stacked `[blocks, rates]` vector, `2n + 1`.
    pub fn stacked_len(&self) -> usize {
        2 * self.intervals() + 1
    }

    pub fn block_index(&self, k: usize) -> usize {
        k
    }

    pub fn rate_index(&self, m: usize) -> usize {
        self.intervals() + 1 + m
    }
}

/// A deterministic grid strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    x0: f64,
    grid: TradingGrid,
    blocks: Vec<f64>,
    rates: Vec<f64>,
}

impl Strategy {
    pub fn new(x0: f64, grid: TradingGrid, blocks: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let n = grid.intervals();
        if blocks.len() != n + 1 || rates.len() != n {
            return Err(Error::Structural(format!(
                "grid with {n} intervals needs {} blocks and {n} rates, got {} and {}",
                n + 1,
                blocks.len(),
                rates.len()
            )));
        }
        if !x0.is_finite() || blocks.iter().chain(&rates).any(|v| !v.is_finite()) {
            return Err(Error::Domain("strategy values must be finite".into()));
        }
        Ok(Self {
            x0,
            grid,
            blocks,
            rates,
        })
    }

    /// No trading: `X_t = x0` for all `t`.
    pub fn constant(x0: f64, grid: TradingGrid) -> Self {
        let n = grid.intervals();
        Self {
            x0,
            grid,
            blocks: vec![0.0; n + 1],
            rates: vec![0.0; n],
        }
    }

    pub fn from_stacked(x0: f64, grid: TradingGrid, stacked: &[f64]) -> Result<Self> {
        let n = grid.intervals();
        if stacked.len() != 2 * n + 1 {
            return Err(Error::Structural(format!(
                "stacked vector of length {} does not fit a grid with {n} intervals",
                stacked.len()
            )));
        }
        Self::new(x0, grid, stacked[..=n].to_vec(), stacked[n + 1..].to_vec())
    }

    /// Blocks only.
    pub fn from_blocks(x0: f64, grid: TradingGrid, blocks: Vec<f64>) -> Result<Self> {
        let n = grid.intervals();
        Self::new(x0, grid, blocks, vec![0.0; n])
    }

    /// Rates only.
    pub fn from_rates(x0: f64, grid: TradingGrid, rates: Vec<f64>) -> Result<Self> {
        let n = grid.intervals();
        Self::new(x0, grid, vec![0.0; n + 1], rates)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn grid(&self) -> &TradingGrid {
        &self.grid
    }

    pub fn blocks(&self) -> &[f64] {
        &self.blocks
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.blocks.iter().chain(&self.rates).copied().collect()
    }

    pub fn has_blocks(&self) -> bool {
        self.blocks.iter().any(|&b| b != 0.0)
    }

    pub fn has_rates(&self) -> bool {
        self.rates.iter().any(|&r| r != 0.0)
    }

    /// The path never moves.
    pub fn is_constant(&self) -> bool {
        !self.has_blocks() && !self.has_rates()
    }

    /// Total traded quantity `X_T - x0`.
    pub fn net_trade(&self) -> f64 {
        let blocks: f64 = self.blocks.iter().sum();
        let rates: f64 = (0..self.rates.len())
            .map(|m| self.rates[m] * self.grid.interval_length(m))
            .sum();
        blocks + rates
    }

    /// `X_T`.
    pub fn terminal(&self) -> f64 {
        self.x0 + self.net_trade()
    }

    /// `X_t`; `x0` before time 0 and `X_T` after `T`.
    pub fn inventory_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.x0;
        }
        let times = self.grid.times();
        let mut x = self.x0;
        for (k, &tk) in times.iter().enumerate() {
            if tk <= t {
                x += self.blocks[k];
            }
        }
        for (m, &r) in self.rates.iter().enumerate() {
            let (a, b) = self.grid.interval(m);
            let covered = (t.min(b) - a).max(0.0);
            x += r * covered;
        }
        x
    }

    /// `sum |blocks| + sum |rate| * interval length`.
    pub fn total_variation(&self) -> f64 {
        let blocks: f64 = self.blocks.iter().map(|b| b.abs()).sum();
        let rates: f64 = (0..self.rates.len())
            .map(|m| self.rates[m].abs() * self.grid.interval_length(m))
            .sum();
        blocks + rates
    }

    /// The path `|X|` of the total variation measure (absolute trades), with
    /// the same `x0`.
    pub fn absolute(&self) -> Strategy {
        Strategy {
            x0: self.x0,
            grid: self.grid.clone(),
            blocks: self.blocks.iter().map(|b| b.abs()).collect(),
            rates: self.rates.iter().map(|r| r.abs()).collect(),
        }
    }

    /// Pointwise linear combination `a * self + b * other` of the trades;
    /// `x0` combines the same way.
    pub fn combine(&self, a: f64, other: &Strategy, b: f64) -> Result<Strategy> {
        self.same_grid(other)?;
        let mix = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| a * x + b * y).collect();
        Ok(Strategy {
            x0: a * self.x0 + b * other.x0,
            grid: self.grid.clone(),
            blocks: mix(&self.blocks, &other.blocks),
            rates: mix(&self.rates, &other.rates),
        })
    }

    /// Trades of `self - other` with `x0 = 0`: the signed measure
    /// `dX - dY`.
    pub fn difference(&self, other: &Strategy) -> Result<Strategy> {
        let mut d = self.combine(1.0, other, -1.0)?;
        d.x0 = 0.0;
        Ok(d)
    }

    pub(crate) fn same_grid(&self, other: &Strategy) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Structural("strategies live on different grids".into()));
        }
        Ok(())
    }
}

/// Outcome of an admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub reason: Option<String>,
    /// `∫∫ G(|t - s|) d|X|_s d|X|_t`.
    pub energy: Extended,
}

/// Admissibility under `kernel`.
///
/// Bounded kernels admit every grid strategy. Under a singular kernel any
/// nonzero block trade has infinite energy; rate-only strategies are checked
/// for finite energy of their total variation measure.
pub fn check_admissible(strategy: &Strategy, kernel: &Kernel) -> Result<AdmissibilityReport> {
    if kernel.is_singular() && strategy.has_blocks() {
        return Ok(AdmissibilityReport {
            admissible: false,
            reason: Some("nonzero block under singular kernel".into()),
            energy: Extended::PosInfinity,
        });
    }
    let forms = QuadraticForms::new(kernel, strategy.grid())?;
    let energy = forms.symmetric(&strategy.absolute(), &strategy.absolute())?;
    if !energy.is_finite() {
        return Ok(AdmissibilityReport {
            admissible: false,
            reason: Some("infinite kernel energy".into()),
            energy: Extended::PosInfinity,
        });
    }
    Ok(AdmissibilityReport {
        admissible: true,
        reason: None,
        energy: Extended::Finite(energy),
    })
}

/// A trader's randomization device with finitely many outcomes: scenario
/// `k` is played with probability `weights[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedStrategy {
    weights: Vec<f64>,
    scenarios: Vec<Strategy>,
}

impl RandomizedStrategy {
    pub fn new(scenarios: Vec<(f64, Strategy)>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Domain("a randomized strategy needs at least one scenario".into()));
        }
        let (weights, scenarios): (Vec<f64>, Vec<Strategy>) = scenarios.into_iter().unzip();
        if weights.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::Domain("scenario probabilities must lie in (0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!("scenario probabilities sum to {total}, not 1")));
        }
        let first = &scenarios[0];
        for s in &scenarios[1..] {
            first.same_grid(s)?;
            if s.x0 != first.x0 {
                return Err(Error::Structural("all scenarios must share the initial holding".into()));
            }
        }
        Ok(Self { weights, scenarios })
    }

    /// The degenerate mixture playing `strategy` surely.
    pub fn deterministic(strategy: Strategy) -> Self {
        Self {
            weights: vec![1.0],
            scenarios: vec![strategy],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scenarios(&self) -> &[Strategy] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn x0(&self) -> f64 {
        self.scenarios[0].x0
    }

    pub fn grid(&self) -> &TradingGrid {
        self.scenarios[0].grid()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Strategy)> {
        self.weights.iter().copied().zip(&self.scenarios)
    }

    /// At least two scenarios trade differently.
    pub fn is_strictly_randomized(&self) -> bool {
        let first = &self.scenarios[0];
        self.scenarios[1..]
            .iter()
            .any(|s| s.blocks != first.blocks || s.rates != first.rates)
    }

    /// The scenario average: the probability-weighted mean of blocks and
    /// rates, same `x0` and grid. This is the projection of the randomized
    /// strategy onto public information.
    pub fn derandomize(&self) -> Strategy {
        let first = &self.scenarios[0];
        let mut blocks = vec![0.0; first.blocks.len()];
        let mut rates = vec![0.0; first.rates.len()];
        for (p, s) in self.iter() {
            for (acc, b) in blocks.iter_mut().zip(&s.blocks) {
                *acc += p * b;
            }
            for (acc, r) in rates.iter_mut().zip(&s.rates) {
                *acc += p * r;
            }
        }
        if self.scenarios.len() == 1 {
            return first.clone();
        }
        Strategy {
            x0: first.x0,
            grid: first.grid.clone(),
            blocks,
            rates,
        }
    }
}

/// Serialized form `{x0, times, blocks, rates}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyRecord {
    pub x0: f64,
    pub times: Vec<f64>,
    pub blocks: Vec<f64>,
    pub rates: Vec<f64>,
}

impl From<&Strategy> for StrategyRecord {
    fn from(s: &Strategy) -> Self {
        Self {
            x0: s.x0,
            times: s.grid.times().to_vec(),
            blocks: s.blocks.clone(),
            rates: s.rates.clone(),
        }
    }
}

impl TryFrom<StrategyRecord> for Strategy {
    type Error = Error;

    fn try_from(r: StrategyRecord) -> Result<Self> {
        Strategy::new(r.x0, TradingGrid::new(r.times)?, r.blocks, r.rates)
    }
}

/// Serialized randomized strategy: a list of weighted strategy records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedStrategyRecord {
    pub weight: f64,
    #[serde(flatten)]
    pub strategy: StrategyRecord,
}

impl From<&RandomizedStrategy> for Vec<WeightedStrategyRecord> {
    fn from(r: &RandomizedStrategy) -> Self {
        r.iter()
            .map(|(weight, s)| WeightedStrategyRecord {
                weight,
                strategy: s.into(),
            })
            .collect()
    }
}

impl TryFrom<Vec<WeightedStrategyRecord>> for RandomizedStrategy {
    type Error = Error;

    fn try_from(v: Vec<WeightedStrategyRecord>) -> Result<Self> {
        let scenarios = v
            .into_iter()
            .map(|w| Ok((w.weight, Strategy::try_from(w.strategy)?)))
            .collect::<Result<Vec<_>>>()?;
        RandomizedStrategy::new(scenarios)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid01() -> TradingGrid {
        TradingGrid::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TradingGrid::new(vec![0.0]).is_err());
        assert!(TradingGrid::new(vec![0.5, 1.0]).is_err());
        assert!(TradingGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        let g = TradingGrid::uniform(2.0, 4).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.stacked_len(), 9);
        assert_eq!(g.rate_index(0), 5);
    }

    #[test]
    fn inventory_examples() {
        let g = TradingGrid::uniform(1.0, 2).unwrap();
        assert_eq!(Strategy::constant(5.0, g.clone()).inventory_at(0.7), 5.0);

        let liq = Strategy::from_blocks(1.0, grid01(), vec![-1.0, 0.0]).unwrap();
        assert_eq!(liq.inventory_at(0.0), 0.0);
        assert_eq!(liq.inventory_at(-1.0), 1.0);

        let buy = Strategy::from_rates(0.0, grid01(), vec![2.0]).unwrap();
        assert_eq!(buy.inventory_at(0.5), 1.0);
        assert_eq!(buy.inventory_at(7.0), 2.0);
        assert_eq!(buy.terminal(), 2.0);
    }

    #[test]
    fn total_variation_examples() {
        let roundtrip = Strategy::from_blocks(0.0, grid01(), vec![1.0, -1.0]).unwrap();
        assert_eq!(roundtrip.total_variation(), 2.0);
        let g = TradingGrid::new(vec![0.0, 2.0]).unwrap();
        let sell = Strategy::from_rates(0.0, g.clone(), vec![-3.0]).unwrap();
        assert_eq!(sell.total_variation(), 6.0);
        assert_eq!(Strategy::constant(3.0, g).total_variation(), 0.0);
    }

    #[test]
    fn derandomize_examples() {
        let a = Strategy::from_blocks(0.0, grid01(), vec![1.0, 0.0]).unwrap();
        let b = Strategy::from_blocks(0.0, grid01(), vec![0.0, 1.0]).unwrap();
        let mix = RandomizedStrategy::new(vec![(0.5, a.clone()), (0.5, b)]).unwrap();
        assert!(mix.is_strictly_randomized());
        assert_eq!(mix.derandomize().blocks(), &[0.5, 0.5]);

        let single = RandomizedStrategy::deterministic(a.clone());
        assert!(!single.is_strictly_randomized());
        assert_eq!(single.derandomize(), a);

        let neg = a.combine(-1.0, &a, 0.0).unwrap();
        let sym = RandomizedStrategy::new(vec![(0.5, a.clone()), (0.5, neg)]).unwrap();
        assert!(sym.derandomize().is_constant());
    }

    #[test]
    fn randomized_validation() {
        let a = Strategy::from_blocks(0.0, grid01(), vec![1.0, 0.0]).unwrap();
        assert!(RandomizedStrategy::new(vec![]).is_err());
        assert!(RandomizedStrategy::new(vec![(0.6, a.clone()), (0.6, a.clone())]).is_err());
        assert!(RandomizedStrategy::new(vec![(0.0, a.clone()), (1.0, a.clone())]).is_err());
        let other_x0 = Strategy::from_blocks(1.0, grid01(), vec![1.0, 0.0]).unwrap();
        assert!(RandomizedStrategy::new(vec![(0.5, a.clone()), (0.5, other_x0)]).is_err());
        let other_grid = Strategy::constant(0.0, TradingGrid::uniform(1.0, 2).unwrap());
        assert!(RandomizedStrategy::new(vec![(0.5, a), (0.5, other_grid)]).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let sing = Kernel::singular_power_law(0.5).unwrap();
        let block = Strategy::from_blocks(0.0, grid01(), vec![1.0, 0.0]).unwrap();
        let rep = check_admissible(&block, &sing).unwrap();
        assert!(!rep.admissible);
        assert_eq!(rep.reason.as_deref(), Some("nonzero block under singular kernel"));
        assert_eq!(rep.energy, Extended::PosInfinity);

        // one cell [0,1] with |rate| 2: energy 4 * 8/3
        let rate = Strategy::from_rates(0.0, grid01(), vec![-2.0]).unwrap();
        let rep = check_admissible(&rate, &sing).unwrap();
        assert!(rep.admissible);
        let e = rep.energy.as_option().unwrap();
        assert!((e - 4.0 * 8.0 / 3.0).abs() < 1e-13);

        let exp = Kernel::exponential(1.0, 1.0).unwrap();
        assert!(check_admissible(&block, &exp).unwrap().admissible);
    }

    #[test]
    fn record_round_trip() {
        let s = Strategy::new(1.0, TradingGrid::uniform(1.0, 2).unwrap(), vec![-0.5, 0.0, -0.25], vec![0.1, -0.6])
            .unwrap();
        let rec = StrategyRecord::from(&s);
        let json = serde_json::to_string(&rec).unwrap();
        let back: StrategyRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(Strategy::try_from(back).unwrap(), s);
    }
}
