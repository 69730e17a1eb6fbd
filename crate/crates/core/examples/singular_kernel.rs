//! The singular power law `t^-gamma` charges infinite cost for block
//! trades, so only rates are admissible. The shifted kernels
//! `(t + 1/n)^-gamma` approach its cost from below.

use impact_game::cost::{objective, CostSpec};
use impact_game::{Kernel, Strategy, TradingGrid};

fn main() -> impact_game::Result<()> {
    let kernel = Kernel::singular_power_law(0.5)?;
    let grid = TradingGrid::uniform(1.0, 5)?;
    let spec = CostSpec::zero().liquidating();
    let sell = Strategy::from_rates(1.0, grid.clone(), vec![-1.5, -1.25, -1.0, -0.75, -0.5])?;

    let exact = objective(&kernel, &spec, &sell, &[])?.finite("singular cost")?;
    println!("J under t^-1/2          = {exact:.8}");
    for n in [10, 100, 1_000, 10_000] {
        let shifted = kernel.shift_approximation(n)?;
        let j = objective(&shifted, &spec, &sell, &[])?.finite("shifted cost")?;
        println!("J under (t + 1/{n:<5})^-1/2 = {j:.8}  relative gap {:.2e}", (exact - j) / exact);
    }

    let block = Strategy::from_blocks(1.0, grid, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    match objective(&kernel, &spec, &block, &[]) {
        Err(e) => println!("block sale rejected: {e}"),
        Ok(j) => println!("unexpected: block sale costs {j}"),
    }
    Ok(())
}
