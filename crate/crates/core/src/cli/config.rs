//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [kernel]
//! family = "exponential"      # truncated_power_law | singular_power_law | shifted_singular | constant
//! eta = 1.0
//! lambda = 1.0
//!
//! [grid]
//! T = 1.0
//! n = 4                       # or: times = [0.0, 0.25, 1.0]
//!
//! [[traders]]
//! x0 = 1.0
//! theta = 0.5                 # or one value per grid time
//! liquidation = true          # or: phi = 2.0
//! blocks = [-0.5, 0.0, 0.0, 0.0, -0.5]
//!
//! [[traders]]
//! x0 = 0.0
//! [[traders.scenarios]]
//! weight = 0.5
//! blocks = [1.0, 0.0, 0.0, 0.0, -1.0]
//! [[traders.scenarios]]
//! weight = 0.5
//! rates = [0.0, 0.0, 0.0, 0.0]
//!
//! [experiment]
//! class = "blocks"
//!
//! [price]
//! model = "gaussian_increments"
//! p0 = 100.0
//! volatility = 1.0
//! ```
//!
//! Unknown keys are rejected everywhere. The constant kernel is accepted
//! only with `test_kernel = true`.

use serde::Deserialize;

use crate::cost::CostSpec;
use crate::equilibrium::{GameSpec, StrategyClass, TraderSpec};
use crate::error::{Error, Result};
use crate::kernels::{Family, Kernel, KernelParams};
use crate::market_sim::{Dynamics, PriceModel};
use crate::strategy::{RandomizedStrategy, Strategy, TradingGrid};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: Family,
    #[serde(default = "one")]
    pub eta: f64,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub shift: Option<f64>,
    #[serde(default)]
    pub test_kernel: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub n: Option<usize>,
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThetaValue {
    Uniform(f64),
    PerTime(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub weight: f64,
    pub blocks: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraderSection {
    pub x0: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub theta: Option<ThetaValue>,
    pub phi: Option<f64>,
    #[serde(default)]
    pub liquidation: bool,
    pub trading_dates: Option<Vec<usize>>,
    pub blocks: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
    pub scenarios: Option<Vec<ScenarioSection>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub class: Option<StrategyClass>,
    pub grid_sizes: Option<Vec<usize>>,
    pub paths: Option<usize>,
    pub alpha: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub pd_shifts: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianIncrements,
    ScaledRandomWalk,
    JumpMixture,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub model: ModelKind,
    #[serde(default)]
    pub p0: f64,
    pub volatility: f64,
    pub step: Option<f64>,
    pub jump_intensity: Option<f64>,
    pub jump_size: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub traders: Vec<TraderSection>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    pub price: Option<PriceSection>,
    pub seed: Option<u64>,
}

pub const DEFAULT_GRID_SIZES: [usize; 5] = [4, 8, 16, 32, 64];
pub const DEFAULT_PD_SHIFTS: [u64; 3] = [10, 100, 1000];
pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let k = &self.kernel;
        if k.family == Family::Constant && !k.test_kernel {
            return Err(config_err("the constant kernel is a test fixture; set `test_kernel = true`"));
        }
        if k.family != Family::Constant && k.test_kernel {
            return Err(config_err("`test_kernel` only applies to the constant kernel"));
        }
        Kernel::from_params(&KernelParams {
            family: k.family,
            eta: k.eta,
            lambda: k.lambda,
            gamma: k.gamma,
            shift: k.shift,
        })
    }

    pub fn grid(&self) -> Result<TradingGrid> {
        let g = &self.grid;
        match (&g.times, g.n, g.horizon) {
            (Some(_), Some(_), _) => Err(config_err("grid: give either `n` or `times`, not both")),
            (Some(times), None, horizon) => {
                if let (Some(h), Some(&last)) = (horizon, times.last()) {
                    if h != last {
                        return Err(config_err("grid: `T` differs from the last of `times`"));
                    }
                }
                TradingGrid::new(times.clone())
            }
            (None, Some(n), Some(h)) => TradingGrid::uniform(h, n),
            (None, Some(_), None) => Err(config_err("grid: `n` needs `T`")),
            (None, None, _) => Err(config_err("grid: missing `n` or `times`")),
        }
    }

    pub fn class(&self) -> StrategyClass {
        self.experiment.class.unwrap_or(StrategyClass::Mixed)
    }

    pub fn cost_spec(&self, i: usize) -> Result<CostSpec> {
        let t = &self.traders[i];
        let mut spec = CostSpec::zero().with_epsilon(t.epsilon);
        spec = match &t.theta {
            None => spec,
            Some(ThetaValue::Uniform(v)) => spec.with_theta(*v),
            Some(ThetaValue::PerTime(v)) => spec.with_theta_per_time(v.clone()),
        };
        spec = match (t.liquidation, t.phi) {
            (true, Some(_)) => {
                return Err(config_err(format!("trader {i}: `phi` and `liquidation` are mutually exclusive")))
            }
            (true, None) => spec.liquidating(),
            (false, phi) => spec.with_penalty(phi.unwrap_or(0.0)),
        };
        if let Some(d) = &t.trading_dates {
            spec = spec.with_trading_dates(d.clone());
        }
        Ok(spec)
    }

    fn strategy(&self, x0: f64, grid: &TradingGrid, blocks: &Option<Vec<f64>>, rates: &Option<Vec<f64>>) -> Result<Strategy> {
        let n = grid.intervals();
        Strategy::new(
            x0,
            grid.clone(),
            blocks.clone().unwrap_or_else(|| vec![0.0; n + 1]),
            rates.clone().unwrap_or_else(|| vec![0.0; n]),
        )
    }

    /// Trader `i`'s configured strategy; a plain strategy becomes a
    /// one-scenario mixture.
    pub fn randomized_strategy(&self, i: usize) -> Result<RandomizedStrategy> {
        let t = &self.traders[i];
        let grid = self.grid()?;
        match &t.scenarios {
            Some(_) if t.blocks.is_some() || t.rates.is_some() => Err(config_err(format!(
                "trader {i}: give either `blocks`/`rates` or `scenarios`, not both"
            ))),
            Some(list) => RandomizedStrategy::new(
                list.iter()
                    .map(|s| Ok((s.weight, self.strategy(t.x0, &grid, &s.blocks, &s.rates)?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => Ok(RandomizedStrategy::deterministic(self.strategy(t.x0, &grid, &t.blocks, &t.rates)?)),
        }
    }

    fn require_traders(&self) -> Result<()> {
        if self.traders.is_empty() {
            return Err(config_err("at least one [[traders]] entry is required"));
        }
        Ok(())
    }

    /// `(cost, strategy)` of every trader.
    pub fn players(&self) -> Result<Vec<(CostSpec, RandomizedStrategy)>> {
        self.require_traders()?;
        (0..self.traders.len())
            .map(|i| {
                let spec = self.cost_spec(i)?;
                spec.validate(&self.grid()?)?;
                Ok((spec, self.randomized_strategy(i)?))
            })
            .collect()
    }

    pub fn game(&self) -> Result<GameSpec> {
        self.require_traders()?;
        let traders = (0..self.traders.len())
            .map(|i| Ok(TraderSpec::new(self.traders[i].x0, self.cost_spec(i)?)))
            .collect::<Result<Vec<_>>>()?;
        GameSpec::new(self.kernel()?, self.grid()?, traders, self.class())
    }

    pub fn price_model(&self, seed: u64) -> Result<PriceModel> {
        let p = self
            .price
            .as_ref()
            .ok_or_else(|| config_err("the simulate command needs a [price] section"))?;
        let unused = |what: &str, v: Option<f64>| match v {
            Some(_) => Err(config_err(format!("price: `{what}` does not apply to {:?}", p.model))),
            None => Ok(()),
        };
        let need = |what: &str, v: Option<f64>| v.ok_or_else(|| config_err(format!("price: {:?} needs `{what}`", p.model)));
        let dynamics = match p.model {
            ModelKind::GaussianIncrements => {
                unused("step", p.step)?;
                unused("jump_intensity", p.jump_intensity)?;
                unused("jump_size", p.jump_size)?;
                Dynamics::GaussianIncrements
            }
            ModelKind::ScaledRandomWalk => {
                unused("jump_intensity", p.jump_intensity)?;
                unused("jump_size", p.jump_size)?;
                Dynamics::ScaledRandomWalk { step: need("step", p.step)? }
            }
            ModelKind::JumpMixture => {
                unused("step", p.step)?;
                Dynamics::JumpMixture {
                    intensity: need("jump_intensity", p.jump_intensity)?,
                    jump_size: need("jump_size", p.jump_size)?,
                }
            }
        };
        PriceModel::new(dynamics, p.p0, p.volatility, seed)
    }

    pub fn grid_sizes(&self) -> Vec<usize> {
        self.experiment.grid_sizes.clone().unwrap_or_else(|| DEFAULT_GRID_SIZES.to_vec())
    }

    pub fn pd_shifts(&self) -> Vec<u64> {
        self.experiment.pd_shifts.clone().unwrap_or_else(|| DEFAULT_PD_SHIFTS.to_vec())
    }
}
