//! A coin flip between trading early and trading late costs more than
//! trading half at each time; the saving is the kernel energy of the
//! deviations from the average.

use impact_game::cost::{derandomization_gap, CostSpec};
use impact_game::{Kernel, RandomizedStrategy, Strategy, TradingGrid};

fn main() -> impact_game::Result<()> {
    let kernel = Kernel::exponential(1.0, 1.0)?;
    let grid = TradingGrid::new(vec![0.0, 1.0])?;
    let early = Strategy::from_blocks(0.0, grid.clone(), vec![1.0, 0.0])?;
    let late = Strategy::from_blocks(0.0, grid, vec![0.0, 1.0])?;
    let coin = RandomizedStrategy::new(vec![(0.5, early), (0.5, late)])?;

    let r = derandomization_gap(&kernel, &CostSpec::zero(), &coin, &[])?;
    println!("E[J] randomized  = {}", r.j_randomized);
    println!("J of the average = {}", r.j_derandomized);
    println!("gap              = {}  (predicted {:.15})", r.gap, r.predicted_kernel_gap);
    println!("(1 - e^-1) / 4   = {:.15}", (1.0 - (-1.0f64).exp()) / 4.0);

    let r = derandomization_gap(&kernel, &CostSpec::zero().with_theta(1.0), &coin, &[])?;
    println!("with theta = 1: gap = {} >= {:.15}", r.gap, r.predicted_kernel_gap);
    Ok(())
}
