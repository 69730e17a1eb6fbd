//! Nash equilibrium of a three-trader liquidation game: direct KKT solve,
//! best-response check, and damped best-response iteration from idle.

use impact_game::cost::CostSpec;
use impact_game::equilibrium::{idle_profile, GameSolver, GameSpec, StrategyClass, TraderSpec};
use impact_game::{Kernel, TradingGrid};

fn main() -> impact_game::Result<()> {
    let traders = vec![
        TraderSpec::new(1.0, CostSpec::zero().with_theta(0.5).liquidating()),
        TraderSpec::new(-0.5, CostSpec::zero().with_theta(0.5).liquidating()),
        TraderSpec::new(0.0, CostSpec::zero().with_theta(0.5).with_penalty(1.0)),
    ];
    let game = GameSpec::new(
        Kernel::exponential(1.0, 2.0)?,
        TradingGrid::uniform(1.0, 4)?,
        traders,
        StrategyClass::Blocks,
    )?;
    let solver = GameSolver::new(&game)?;
    let eq = solver.solve()?;
    for (i, x) in eq.profile.iter().enumerate() {
        let blocks: Vec<String> = x.blocks().iter().map(|b| format!("{b:+.4}")).collect();
        println!("trader {i}: blocks [{}]  J = {}", blocks.join(", "), eq.objectives[i]);
    }
    println!("FOC residual {:.2e}, best responses verified: {}", eq.foc_residual, eq.br_verified);

    let damping = solver.damping_analysis()?;
    let alpha = damping.optimal.unwrap_or(0.5);
    let run = solver.iterate(&idle_profile(&game), alpha, 10_000)?;
    println!(
        "best-response iteration (alpha = {alpha:.3}): converged={} after {} sweeps",
        run.converged, run.iterations
    );
    Ok(())
}
