//! Strict positive definiteness of the built-in kernels on an uneven grid,
//! and the constant kernel that fails it.

use impact_game::Kernel;

fn main() -> impact_game::Result<()> {
    let times = [0.0, 0.1, 0.15, 0.4, 0.75, 1.0];
    let kernels = [
        ("exponential(1, 2)", Kernel::exponential(1.0, 2.0)?),
        ("truncated power law(1, 1, 0.6)", Kernel::truncated_power_law(1.0, 1.0, 0.6)?),
        ("singular power law(0.4)", Kernel::singular_power_law(0.4)?),
        ("constant 1 (test only)", Kernel::constant_for_testing(1.0)?),
    ];
    for (name, k) in kernels {
        let r = k.check_positive_definite(&times)?;
        println!(
            "{name:32} form={:?} dim={} min_pivot={:.3e} strictly_pd={}",
            r.form, r.dimension, r.min_pivot, r.is_strictly_pd
        );
    }
    Ok(())
}
