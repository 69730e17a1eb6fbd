//! Pathwise costs against simulated unaffected prices.
//!
//! The realized cost of trader `i` on one price path is
//!
//! ```text
//! sum_k b_k (S_{t_k-} + ΔS_{t_k} / 2) + sum_m r_m ∫_{cell m} S_t dt
//!     + x0 P_0 - X_T P_T + C(X)
//! ```
//!
//! with `S = P + I`. A block executes at the average of the prices just
//! before and just after the simultaneous trades at its time. Since the
//! strategies are deterministic given the device draws, every `P` term has
//! zero mean and the sample mean must converge to the analytic objective.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostEvaluator, CostSpec};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::impact::{self, Side};
use crate::kernels::Kernel;
use crate::strategy::{RandomizedStrategy, Strategy, TradingGrid};

/// Smallest accepted Monte Carlo sample.
pub const MIN_PATHS: usize = 100;

/// Increment law of the unaffected price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dynamics {
    /// `P_t = p0 + volatility W_t`.
    GaussianIncrements,
    /// Steps of `±volatility sqrt(step)` at times `step, 2 step, ...`.
    ScaledRandomWalk { step: f64 },
    /// Brownian part plus compound Poisson jumps with `Normal(0, jump_size)`
    /// sizes at rate `intensity`.
    JumpMixture { intensity: f64, jump_size: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    pub dynamics: Dynamics,
    pub p0: f64,
    pub volatility: f64,
    pub seed: u64,
}

impl PriceModel {
    pub fn new(dynamics: Dynamics, p0: f64, volatility: f64, seed: u64) -> Result<Self> {
        let m = Self {
            dynamics,
            p0,
            volatility,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("price model: {what}")));
        if !self.p0.is_finite() {
            return bad("p0 must be finite");
        }
        if !(self.volatility.is_finite() && self.volatility >= 0.0) {
            return bad("volatility must be finite and >= 0");
        }
        match self.dynamics {
            Dynamics::GaussianIncrements => {}
            Dynamics::ScaledRandomWalk { step } => {
                if !(step.is_finite() && step > 0.0) {
                    return bad("random-walk step must be finite and > 0");
                }
            }
            Dynamics::JumpMixture { intensity, jump_size } => {
                if !(intensity.is_finite() && intensity >= 0.0) {
                    return bad("jump intensity must be finite and >= 0");
                }
                if !(jump_size.is_finite() && jump_size >= 0.0) {
                    return bad("jump size must be finite and >= 0");
                }
            }
        }
        Ok(())
    }
}

/// Everything a grid strategy's cost needs from one price path.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    /// `P_0 = P_{0-}`.
    pub p0: f64,
    pub times: Vec<f64>,
    /// `P_{t_k-}`.
    pub left: Vec<f64>,
    /// `P_{t_k}`.
    pub value: Vec<f64>,
    /// `∫_{t_m}^{t_{m+1}} P_t dt`.
    pub cell_integrals: Vec<f64>,
}

impl PricePath {
    pub fn constant(p0: f64, times: &[f64]) -> Self {
        Self {
            p0,
            times: times.to_vec(),
            left: vec![p0; times.len()],
            value: vec![p0; times.len()],
            cell_integrals: times.windows(2).map(|w| p0 * (w[1] - w[0])).collect(),
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Adds the Brownian part `sigma W` sampled exactly on the grid, including
/// the joint law of each increment and its time integral.
fn add_brownian<R: Rng>(path: &mut PricePath, sigma: f64, rng: &mut R) {
    let mut w = 0.0;
    let mut prev = 0.0;
    for k in 0..path.times.len() {
        let t = path.times[k];
        if k == 0 {
            let z: f64 = StandardNormal.sample(rng);
            w = t.sqrt() * z;
        } else {
            let h = t - prev;
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            let integral = h * w + h.powf(1.5) * (0.5 * z1 + z2 / (2.0 * 3f64.sqrt()));
            path.cell_integrals[k - 1] += sigma * integral;
            w += h.sqrt() * z1;
        }
        path.left[k] += sigma * w;
        path.value[k] += sigma * w;
        prev = t;
    }
}

/// Adds a pure-jump component with jumps `(time, size)` sorted by time.
fn add_jumps(path: &mut PricePath, jumps: &[(f64, f64)]) {
    for &(tau, y) in jumps {
        for k in 0..path.times.len() {
            let t = path.times[k];
            if tau < t {
                path.left[k] += y;
            }
            if tau <= t {
                path.value[k] += y;
            }
        }
        for m in 0..path.cell_integrals.len() {
            let (a, b) = (path.times[m], path.times[m + 1]);
            if tau < b {
                path.cell_integrals[m] += y * (b - tau.max(a));
            }
        }
    }
}

fn sample_path<R: Rng>(model: &PriceModel, times: &[f64], rng: &mut R) -> PricePath {
    let mut path = PricePath::constant(model.p0, times);
    if model.volatility == 0.0 && !matches!(model.dynamics, Dynamics::JumpMixture { .. }) {
        return path;
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    match model.dynamics {
        Dynamics::GaussianIncrements => add_brownian(&mut path, model.volatility, rng),
        Dynamics::ScaledRandomWalk { step } => {
            let size = model.volatility * step.sqrt();
            let coin = Bernoulli::new(0.5).expect("valid probability");
            let mut jumps = Vec::new();
            let mut j = 1u64;
            while (j as f64) * step <= horizon {
                let y = if coin.sample(rng) { size } else { -size };
                jumps.push((j as f64 * step, y));
                j += 1;
            }
            add_jumps(&mut path, &jumps);
        }
        Dynamics::JumpMixture { intensity, jump_size } => {
            if model.volatility > 0.0 {
                add_brownian(&mut path, model.volatility, rng);
            }
            let count = if intensity * horizon > 0.0 {
                Poisson::new(intensity * horizon).expect("positive mean").sample(rng) as usize
            } else {
                0
            };
            let sizes = Normal::new(0.0, jump_size).expect("finite std");
            let mut jumps: Vec<(f64, f64)> = (0..count)
                .map(|_| (horizon * rng.random::<f64>(), sizes.sample(rng)))
                .collect();
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            add_jumps(&mut path, &jumps);
        }
    }
    path
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("evaluation times must be finite, >= 0 and increasing".into()));
    }
    Ok(())
}

/// `P_t` at `eval_times`, deterministic in `model.seed`.
pub fn simulate_price(model: &PriceModel, eval_times: &[f64]) -> Result<Vec<f64>> {
    model.validate()?;
    check_times(eval_times)?;
    let mut rng = rng_for(model.seed, 0);
    Ok(sample_path(model, eval_times, &mut rng).value)
}

/// Sampled path for grid cost evaluation (path index `path`).
pub fn simulate_path(model: &PriceModel, grid: &TradingGrid, path: u64) -> Result<PricePath> {
    model.validate()?;
    let mut rng = rng_for(model.seed, 2 * path);
    Ok(sample_path(model, grid.times(), &mut rng))
}

/// Aggregate impact `I_t` of `profile` at `eval_times`.
pub fn impact_path(kernel: &Kernel, profile: &[&Strategy], eval_times: &[f64]) -> Result<Vec<f64>> {
    check_times(eval_times)?;
    eval_times
        .iter()
        .map(|&t| impact::impact_at(kernel, profile, t, Side::Right))
        .collect()
}

/// `sum_k b_k (I_{t_k-} + ΔI_{t_k} / 2) + sum_m r_m ∫_{cell m} I dt`, the
/// impact part of trader `x_i`'s realized cost, on the impact route.
fn impact_cost(kernel: &Kernel, x_i: &Strategy, profile: &[&Strategy]) -> Result<f64> {
    let times = x_i.grid().times();
    let mut total = 0.0;
    for (k, &b) in x_i.blocks().iter().enumerate() {
        if b != 0.0 {
            let left = impact::impact_at(kernel, profile, times[k], Side::Left)?;
            let jump: f64 = profile.iter().map(|s| s.blocks()[k]).sum::<f64>() * kernel.g0_finite()?;
            total += b * (left + 0.5 * jump);
        }
    }
    for (m, &r) in x_i.rates().iter().enumerate() {
        if r != 0.0 {
            total += r * impact::cell_impact_integral(kernel, profile, m)?;
        }
    }
    Ok(total)
}

/// Price terms of the realized cost. Net trades sum to `X_T - x0`, so `p0`
/// cancels exactly and only deviations from it are accumulated.
fn price_cost(path: &PricePath, x: &Strategy) -> f64 {
    let p0 = path.p0;
    let last = path.value.len() - 1;
    let mut total = -x.terminal() * (path.value[last] - p0);
    for (k, &b) in x.blocks().iter().enumerate() {
        total += b * (0.5 * (path.left[k] + path.value[k]) - p0);
    }
    for (m, &r) in x.rates().iter().enumerate() {
        total += r * (path.cell_integrals[m] - p0 * x.grid().interval_length(m));
    }
    total
}

/// Realized cost of `x_i` on `path` with opponents' drawn strategies
/// `others`.
pub fn realized_cost(
    path: &PricePath,
    kernel: &Kernel,
    spec: &CostSpec,
    x_i: &Strategy,
    others: &[&Strategy],
) -> Result<Extended> {
    if path.times.as_slice() != x_i.grid().times() {
        return Err(Error::Structural("price path is not sampled on the strategy grid".into()));
    }
    let mut profile: Vec<&Strategy> = vec![x_i];
    profile.extend_from_slice(others);
    let c = cost::additional_cost(spec, x_i)?;
    Ok(c + (impact_cost(kernel, x_i, &profile)? + price_cost(path, x_i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraderEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_paths)`.
    pub std_error: f64,
    pub analytic: f64,
    /// `(mean - analytic) / std_error`; `0` for a zero-variance sample that
    /// matches the analytic value, `None` for one that does not.
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n_paths: usize,
    pub seed: u64,
    pub traders: Vec<TraderEstimate>,
}

/// Sum with a fixed binary tree, so the result does not depend on how the
/// terms were produced.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

fn draw<R: Rng>(r: &RandomizedStrategy, rng: &mut R) -> usize {
    if r.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &w) in r.weights().iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    r.len() - 1
}

/// Monte Carlo estimate of every trader's expected cost, compared with the
/// exact enumeration.
///
/// Path `p` samples its price from substream `2p` and the device draws of
/// all traders, in trader order, from substream `2p + 1` of `model.seed`, so
/// the report does not depend on the thread count.
pub fn monte_carlo_objective(
    model: &PriceModel,
    kernel: &Kernel,
    players: &[(CostSpec, RandomizedStrategy)],
    n_paths: usize,
) -> Result<SimulationReport> {
    model.validate()?;
    if n_paths < MIN_PATHS {
        return Err(Error::Domain(format!("need at least {MIN_PATHS} paths, got {n_paths}")));
    }
    let Some((_, first)) = players.first() else {
        return Err(Error::Structural("no traders to simulate".into()));
    };
    let grid = first.grid().clone();
    for (_, r) in players {
        if r.grid() != &grid {
            return Err(Error::Structural("all traders must share one grid".into()));
        }
    }
    if kernel.is_singular() {
        return Err(Error::Domain("pathwise costs need a bounded kernel".into()));
    }

    // C and the impact part only depend on the device draws; tabulate them
    let n = players.len();
    let mut radix = Vec::with_capacity(n);
    let mut combos: usize = 1;
    for (_, r) in players {
        radix.push(combos);
        combos = combos.checked_mul(r.len()).filter(|&c| c as u128 <= cost::ENUMERATION_CAP).ok_or(
            Error::EnumerationCap {
                combinations: players.iter().fold(1u128, |a, (_, r)| a.saturating_mul(r.len() as u128)),
                cap: cost::ENUMERATION_CAP,
            },
        )?;
    }
    let mut extra = Vec::with_capacity(n);
    for (spec, r) in players {
        let c = r
            .iter()
            .map(|(_, x)| cost::additional_cost(spec, x)?.finite("additional cost of a scenario"))
            .collect::<Result<Vec<_>>>()?;
        extra.push(c);
    }
    let table: Vec<Vec<f64>> = (0..combos)
        .into_par_iter()
        .map(|idx| {
            let profile: Vec<&Strategy> = players
                .iter()
                .zip(&radix)
                .map(|((_, r), &rad)| &r.scenarios()[(idx / rad) % r.len()])
                .collect();
            profile
                .iter()
                .enumerate()
                .map(|(i, x)| Ok(impact_cost(kernel, x, &profile)? + extra[i][(idx / radix[i]) % players[i].1.len()]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let samples: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let path = sample_path(model, grid.times(), &mut rng_for(model.seed, 2 * p));
            let mut devices = rng_for(model.seed, 2 * p + 1);
            let draws: Vec<usize> = players.iter().map(|(_, r)| draw(r, &mut devices)).collect();
            let idx: usize = draws.iter().zip(&radix).map(|(d, r)| d * r).sum();
            (0..n)
                .map(|i| table[idx][i] + price_cost(&path, &players[i].1.scenarios()[draws[i]]))
                .collect()
        })
        .collect();

    let eval = CostEvaluator::new(kernel, &grid)?;
    let mut traders = Vec::with_capacity(n);
    for i in 0..n {
        // moments of the samples shifted by the first one
        let shift = samples[0][i];
        let x: Vec<f64> = samples.iter().map(|s| s[i] - shift).collect();
        let shifted_mean = pairwise_sum(&x) / n_paths as f64;
        let dev: Vec<f64> = x.iter().map(|v| (v - shifted_mean) * (v - shifted_mean)).collect();
        let var = pairwise_sum(&dev) / (n_paths - 1) as f64;
        let std_error = (var / n_paths as f64).sqrt();
        let mean = shift + shifted_mean;
        let others: Vec<&RandomizedStrategy> = players
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (_, r))| r)
            .collect();
        let analytic = eval
            .randomized_terms(&players[i].0, &players[i].1, &others, cost::ENUMERATION_CAP)?
            .total
            .finite("analytic objective")?;
        let z_score = if std_error > 0.0 {
            Some((mean - analytic) / std_error)
        } else if (mean - analytic).abs() <= 1e-9 * (1.0 + analytic.abs()) {
            Some(0.0)
        } else {
            None
        };
        traders.push(TraderEstimate {
            mean,
            std_error,
            analytic,
            z_score,
        });
    }
    Ok(SimulationReport {
        n_paths,
        seed: model.seed,
        traders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp11() -> Kernel {
        Kernel::exponential(1.0, 1.0).unwrap()
    }

    fn gauss(vol: f64, seed: u64) -> PriceModel {
        PriceModel::new(Dynamics::GaussianIncrements, 100.0, vol, seed).unwrap()
    }

    #[test]
    fn zero_volatility_path_is_constant() {
        let p = simulate_price(&gauss(0.0, 3), &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(p, vec![100.0; 3]);
    }

    #[test]
    fn same_seed_same_path() {
        for m in [
            gauss(1.0, 9),
            PriceModel::new(Dynamics::ScaledRandomWalk { step: 0.1 }, 1.0, 1.0, 9).unwrap(),
            PriceModel::new(Dynamics::JumpMixture { intensity: 3.0, jump_size: 0.5 }, 1.0, 0.2, 9).unwrap(),
        ] {
            let t = [0.0, 0.3, 0.7, 1.0];
            assert_eq!(simulate_price(&m, &t).unwrap(), simulate_price(&m, &t).unwrap());
        }
    }

    #[test]
    fn gaussian_terminal_increment_has_mean_zero() {
        let m = gauss(1.0, 11);
        let grid = TradingGrid::uniform(1.0, 4).unwrap();
        let n = 100_000u64;
        let x: Vec<f64> = (0..n).map(|p| simulate_path(&m, &grid, p).unwrap().value[4] - 100.0).collect();
        let mean = pairwise_sum(&x) / n as f64;
        let se = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se);
        assert!((se * (n as f64).sqrt() - 1.0).abs() < 0.02);
    }

    #[test]
    fn random_walk_cell_integral_is_piecewise_constant() {
        let m = PriceModel::new(Dynamics::ScaledRandomWalk { step: 0.25 }, 0.0, 2.0, 5).unwrap();
        let grid = TradingGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let p = simulate_path(&m, &grid, 0).unwrap();
        // steps of ±1 at 0.25, 0.5, 0.75, 1.0
        let step_at_half = p.value[1] - p.left[1];
        assert_eq!(step_at_half.abs(), 1.0);
        let first = p.left[1];
        assert_eq!(first.abs(), 1.0);
        assert!((p.cell_integrals[0] - 0.25 * first).abs() < 1e-15);
    }

    #[test]
    fn impact_path_examples() {
        let g = TradingGrid::uniform(2.0, 2).unwrap();
        let one = Strategy::from_blocks(0.0, g.clone(), vec![1.0, 0.0, 0.0]).unwrap();
        let half = Strategy::from_blocks(0.0, g.clone(), vec![0.5, 0.0, 0.0]).unwrap();
        let t = [0.0, 0.4, 1.3, 2.0];
        let i1 = impact_path(&exp11(), &[&one], &t).unwrap();
        for (v, s) in i1.iter().zip(t) {
            assert!((v - (-s).exp()).abs() < 1e-15);
        }
        assert_eq!(impact_path(&exp11(), &[&half, &half], &t).unwrap(), i1);
        let zero = Strategy::constant(0.0, g);
        assert!(impact_path(&exp11(), &[&zero], &t).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn realized_cost_examples() {
        let k = exp11();
        let g = TradingGrid::new(vec![0.0, 1.0]).unwrap();
        let path = PricePath::constant(100.0, g.times());
        let sell = Strategy::from_blocks(1.0, g.clone(), vec![-1.0, 0.0]).unwrap();
        let v = realized_cost(&path, &k, &CostSpec::zero(), &sell, &[]).unwrap();
        assert!((v.as_option().unwrap() - 0.5).abs() < 1e-12);

        let zero = Strategy::constant(0.0, g.clone());
        let m = gauss(1.0, 1);
        let other = Strategy::from_blocks(0.0, g.clone(), vec![0.3, -1.0]).unwrap();
        for p in 0..5 {
            let path = simulate_path(&m, &g, p).unwrap();
            assert_eq!(realized_cost(&path, &k, &CostSpec::zero(), &zero, &[&other]).unwrap(), Extended::Finite(0.0));
        }
    }

    #[test]
    fn constant_price_realized_cost_is_the_objective() {
        let k = Kernel::truncated_power_law(1.5, 2.0, 0.6).unwrap();
        let g = TradingGrid::new(vec![0.0, 0.3, 0.5, 1.0]).unwrap();
        let x = Strategy::new(2.0, g.clone(), vec![-0.5, 0.1, 0.0, -0.3], vec![-1.0, 0.5, -0.8]).unwrap();
        let y = Strategy::new(-1.0, g.clone(), vec![0.2, 0.0, 0.4, 0.0], vec![0.7, 1.0, 0.0]).unwrap();
        let spec = CostSpec::zero().with_theta(0.2).with_penalty(0.5);
        let path = PricePath::constant(37.0, g.times());
        let r = realized_cost(&path, &k, &spec, &x, &[&y]).unwrap().as_option().unwrap();
        let j = cost::objective(&k, &spec, &x, &[&y]).unwrap().as_option().unwrap();
        assert!((r - j).abs() < 1e-10, "{r} vs {j}");
    }

    #[test]
    fn zero_volatility_monte_carlo_has_zero_z() {
        let k = exp11();
        let g = TradingGrid::uniform(1.0, 2).unwrap();
        let x = Strategy::from_blocks(1.0, g.clone(), vec![-0.5, -0.2, -0.3]).unwrap();
        let rep = monte_carlo_objective(
            &gauss(0.0, 1),
            &k,
            &[(CostSpec::zero().liquidating(), RandomizedStrategy::deterministic(x))],
            200,
        )
        .unwrap();
        assert_eq!(rep.traders[0].std_error, 0.0);
        assert_eq!(rep.traders[0].z_score, Some(0.0));
    }

    #[test]
    fn report_is_seed_deterministic() {
        let k = exp11();
        let g = TradingGrid::uniform(1.0, 2).unwrap();
        let a = Strategy::from_blocks(1.0, g.clone(), vec![-1.0, 0.0, 0.0]).unwrap();
        let b = Strategy::from_blocks(1.0, g.clone(), vec![0.0, -0.5, -0.5]).unwrap();
        let r = RandomizedStrategy::new(vec![(0.3, a), (0.7, b)]).unwrap();
        let players = vec![(CostSpec::zero(), r.clone()), (CostSpec::zero().with_theta(0.5), r)];
        let m = PriceModel::new(Dynamics::JumpMixture { intensity: 2.0, jump_size: 0.3 }, 10.0, 0.5, 77).unwrap();
        let one = monte_carlo_objective(&m, &k, &players, 500).unwrap();
        let two = monte_carlo_objective(&m, &k, &players, 500).unwrap();
        assert_eq!(one, two);
    }
}
