//! Realized costs against simulated prices average out to the analytic
//! expected cost, whatever the martingale.

use impact_game::cost::CostSpec;
use impact_game::market_sim::{monte_carlo_objective, Dynamics, PriceModel};
use impact_game::{Kernel, RandomizedStrategy, Strategy, TradingGrid};

fn main() -> impact_game::Result<()> {
    let kernel = Kernel::exponential(1.0, 1.0)?;
    let grid = TradingGrid::uniform(1.0, 4)?;
    let seller = Strategy::new(1.0, grid.clone(), vec![-0.3, 0.0, 0.0, 0.0, -0.3], vec![-0.4; 4])?;
    let fast = Strategy::from_blocks(0.0, grid.clone(), vec![0.5, 0.0, 0.0, 0.0, -0.5])?;
    let slow = Strategy::from_rates(0.0, grid, vec![0.25, 0.25, -0.25, -0.25])?;
    let players = vec![
        (CostSpec::zero().liquidating(), RandomizedStrategy::deterministic(seller)),
        (CostSpec::zero().with_theta(0.2), RandomizedStrategy::new(vec![(0.3, fast), (0.7, slow)])?),
    ];

    let models = [
        Dynamics::GaussianIncrements,
        Dynamics::ScaledRandomWalk { step: 0.05 },
        Dynamics::JumpMixture { intensity: 3.0, jump_size: 0.5 },
    ];
    for dynamics in models {
        let model = PriceModel::new(dynamics, 100.0, 1.0, 11)?;
        let report = monte_carlo_objective(&model, &kernel, &players, 20_000)?;
        println!("{dynamics:?}");
        for (i, t) in report.traders.iter().enumerate() {
            println!(
                "  trader {i}: mean {:+.5} ± {:.5}  analytic {:+.5}  z = {:+.2}",
                t.mean,
                t.std_error,
                t.analytic,
                t.z_score.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
