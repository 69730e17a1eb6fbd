//! Pointwise impact `I_t = ∫_0^t G(t - s) sum_i dX^i_s`.
//!
//! This is the path-based route to the ordered integrals: impact values come
//! from single antiderivatives of `G` and are integrated against trading
//! rates by adaptive quadrature. It shares no code with the double-integral
//! closed forms in [`crate::forms`], which is what makes it useful as a
//! cross-check.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::quadrature;
use crate::strategy::Strategy;

/// Absolute tolerance for integrating impact against rates over one cell.
pub const CELL_TOL: f64 = 1e-13;

/// Whether a grid time's own block trades enter the impact value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `I_{t-}`: trades at exactly `t` excluded.
    Left,
    /// `I_t`: trades at `t` included.
    Right,
}

fn check_profile(kernel: &Kernel, profile: &[&Strategy]) -> Result<()> {
    if let Some(first) = profile.first() {
        for s in &profile[1..] {
            first.same_grid(s)?;
        }
    }
    if kernel.is_singular() && profile.iter().any(|s| s.has_blocks()) {
        return Err(Error::Admissibility(
            "pointwise impact of a block trade under a singular kernel is infinite".into(),
        ));
    }
    Ok(())
}

fn impact_of(kernel: &Kernel, s: &Strategy, t: f64, side: Side) -> f64 {
    let times = s.grid().times();
    let mut v = 0.0;
    for (&tk, &b) in times.iter().zip(s.blocks()) {
        let included = match side {
            Side::Left => tk < t,
            Side::Right => tk <= t,
        };
        if b != 0.0 && included {
            v += b * kernel.value(t - tk);
        }
    }
    for (m, &r) in s.rates().iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let (a, b) = s.grid().interval(m);
        if t >= b {
            v += r * kernel.integral(t - b, t - a);
        } else if t > a {
            v += r * kernel.integral(0.0, t - a);
        }
    }
    v
}

/// Aggregate impact of `profile` at time `t`.
pub fn impact_at(kernel: &Kernel, profile: &[&Strategy], t: f64, side: Side) -> Result<f64> {
    check_profile(kernel, profile)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("impact requested at negative time {t}")));
    }
    Ok(profile.iter().map(|s| impact_of(kernel, s, t, side)).sum())
}

/// `∫_{cell m} I_t dt` of the aggregate impact, by adaptive quadrature.
pub fn cell_impact_integral(kernel: &Kernel, profile: &[&Strategy], m: usize) -> Result<f64> {
    check_profile(kernel, profile)?;
    let Some(first) = profile.first() else {
        return Ok(0.0);
    };
    let (a, b) = first.grid().interval(m);
    quadrature::integrate(
        |t| profile.iter().map(|s| impact_of(kernel, s, t, Side::Right)).sum(),
        a,
        b,
        CELL_TOL,
    )
}

/// `∫_0^T ∫_0^{t-} G(t - s) dM_s dN_t` computed as `∫ I^M_{t-} dN_t`.
pub fn ordered_by_impact(kernel: &Kernel, inner: &Strategy, outer: &Strategy) -> Result<f64> {
    inner.same_grid(outer)?;
    check_profile(kernel, &[inner, outer])?;
    let times = outer.grid().times();
    let mut total = 0.0;
    for (k, &b) in outer.blocks().iter().enumerate() {
        if b != 0.0 {
            total += b * impact_of(kernel, inner, times[k], Side::Left);
        }
    }
    for (m, &r) in outer.rates().iter().enumerate() {
        if r != 0.0 {
            total += r * cell_impact_integral(kernel, &[inner], m)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::TradingGrid;

    #[test]
    fn single_block_decays_like_the_kernel() {
        let k = Kernel::exponential(1.0, 1.0).unwrap();
        let g = TradingGrid::uniform(2.0, 2).unwrap();
        let s = Strategy::from_blocks(0.0, g, vec![1.0, 0.0, 0.0]).unwrap();
        for t in [0.0, 0.3, 1.0, 1.7, 2.0] {
            let i = impact_at(&k, &[&s], t, Side::Right).unwrap();
            assert!((i - (-t).exp()).abs() < 1e-15);
        }
        assert_eq!(impact_at(&k, &[&s], 0.0, Side::Left).unwrap(), 0.0);
    }

    #[test]
    fn rate_impact_matches_antiderivative() {
        let k = Kernel::exponential(2.0, 0.5).unwrap();
        let g = TradingGrid::new(vec![0.0, 1.0, 3.0]).unwrap();
        let s = Strategy::from_rates(0.0, g, vec![1.0, 0.0]).unwrap();
        // I_t = 2 ∫_0^1 e^{-(t-s)/2} ds for t >= 1
        let t = 2.5;
        let exact = 2.0 * 2.0 * ((-(t - 1.0) / 2.0_f64).exp() - (-t / 2.0_f64).exp());
        let i = impact_at(&k, &[&s], t, Side::Left).unwrap();
        assert!((i - exact).abs() < 1e-14);
    }

    #[test]
    fn singular_kernel_blocks_refused() {
        let k = Kernel::singular_power_law(0.5).unwrap();
        let g = TradingGrid::uniform(1.0, 1).unwrap();
        let s = Strategy::from_blocks(0.0, g, vec![0.0, 1.0]).unwrap();
        assert!(impact_at(&k, &[&s], 1.0, Side::Left).is_err());
    }
}
