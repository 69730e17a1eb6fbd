//! Two liquidating traders without block costs churn more and more as the
//! grid is refined; a block cost keeps the schedules tame.

use impact_game::cost::CostSpec;
use impact_game::equilibrium::{refinement_study, GameSpec, StrategyClass, TraderSpec};
use impact_game::{Kernel, TradingGrid};

fn main() -> impact_game::Result<()> {
    let sizes = [4, 8, 16, 32, 64];
    for theta in [0.0, 1.0] {
        let spec = CostSpec::zero().with_theta(theta).liquidating();
        let game = GameSpec::new(
            Kernel::exponential(1.0, 1.0)?,
            TradingGrid::uniform(1.0, 4)?,
            vec![TraderSpec::new(1.0, spec.clone()), TraderSpec::new(1.0, spec)],
            StrategyClass::Blocks,
        )?;
        println!("theta = {theta}");
        for row in refinement_study(&game, &sizes)? {
            println!("  n = {:3}  total variation = {:.4}", row.n, row.total_variation[0]);
        }
    }
    Ok(())
}
