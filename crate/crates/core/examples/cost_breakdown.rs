//! Expected cost of two traders split into own impact, impact caused by the
//! other trader, and the additional cost `C`.

use impact_game::cost::{CostEvaluator, CostSpec};
use impact_game::{Kernel, Strategy, TradingGrid};

fn main() -> impact_game::Result<()> {
    let kernel = Kernel::exponential(1.0, 1.0)?;
    let grid = TradingGrid::uniform(1.0, 4)?;
    // a seller who front-loads and a buyer who trades at a constant rate
    let seller = Strategy::new(1.0, grid.clone(), vec![-0.4, 0.0, 0.0, 0.0, -0.2], vec![-0.4; 4])?;
    let buyer = Strategy::from_rates(0.0, grid.clone(), vec![0.5; 4])?;
    let eval = CostEvaluator::new(&kernel, &grid)?;

    let seller_cost = CostSpec::zero().with_theta(0.1).liquidating();
    let buyer_cost = CostSpec::zero().with_epsilon(0.05).with_penalty(2.0);
    for (name, spec, me, other) in [
        ("seller", &seller_cost, &seller, &buyer),
        ("buyer", &buyer_cost, &buyer, &seller),
    ] {
        let t = eval.terms(spec, me, &[other])?;
        println!(
            "{name:6} self={:.6} cross={:+.6} C={} total={}",
            t.self_impact, t.cross_impact, t.additional, t.total
        );
    }
    Ok(())
}
