use impact_game::cost::{derandomization_gap, CostEvaluator, CostSpec};
use impact_game::equilibrium::{GameSolver, GameSpec, StrategyClass, TraderSpec};
use impact_game::{Kernel, RandomizedStrategy, Strategy, TradingGrid};
use proptest::strategy::Strategy as Gen;
use proptest::prelude::*;

fn kernel() -> impl Gen<Value = Kernel> {
    prop_oneof![
        (0.2f64..3.0, 0.1f64..4.0).prop_map(|(eta, lambda)| Kernel::exponential(eta, lambda).unwrap()),
        (0.2f64..3.0, 0.1f64..3.0, 0.1f64..2.0)
            .prop_map(|(eta, lambda, gamma)| Kernel::truncated_power_law(eta, lambda, gamma).unwrap()),
    ]
}

fn grid(max_n: usize) -> impl Gen<Value = TradingGrid> {
    (prop::collection::vec(0.05f64..1.0, 1..=max_n), 0.2f64..3.0).prop_map(|(widths, horizon)| {
        let total: f64 = widths.iter().sum();
        let mut times = vec![0.0];
        let mut acc = 0.0;
        for w in &widths {
            acc += w;
            times.push(horizon * acc / total);
        }
        *times.last_mut().unwrap() = horizon;
        TradingGrid::new(times).unwrap()
    })
}

fn schedule(g: &TradingGrid, x0: f64) -> impl Gen<Value = Strategy> {
    let n = g.intervals();
    let g = g.clone();
    (prop::collection::vec(-2.0f64..2.0, n + 1), prop::collection::vec(-2.0f64..2.0, n))
        .prop_map(move |(b, r)| Strategy::new(x0, g.clone(), b, r).unwrap())
}

/// Kernel, grid and `k` schedules on it.
fn setup(k: usize) -> impl Gen<Value = (Kernel, Vec<Strategy>)> {
    (kernel(), grid(6)).prop_flat_map(move |(kern, g)| {
        (Just(kern), prop::collection::vec(schedule(&g, 0.4), k))
    })
}

fn is_zero(s: &Strategy) -> bool {
    s.blocks().iter().chain(s.rates()).all(|v| *v == 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_quadratic_form_is_positive((k, xs) in setup(1)) {
        let x = &xs[0];
        prop_assume!(!is_zero(x));
        let eval = CostEvaluator::new(&k, x.grid()).unwrap();
        prop_assert!(eval.self_quadratic_form(x).unwrap() > 0.0);
    }

    #[test]
    fn symmetric_form_is_symmetric((k, xs) in setup(2)) {
        let eval = CostEvaluator::new(&k, xs[0].grid()).unwrap();
        let f = eval.forms();
        let a = f.symmetric(&xs[0], &xs[1]).unwrap();
        let b = f.symmetric(&xs[1], &xs[0]).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    /// The two cross terms of a pair add up to the full symmetric form.
    #[test]
    fn cross_terms_split_the_symmetric_form((k, xs) in setup(2)) {
        let eval = CostEvaluator::new(&k, xs[0].grid()).unwrap();
        let both = eval.cross_term(&xs[0], &xs[1]).unwrap() + eval.cross_term(&xs[1], &xs[0]).unwrap();
        let sym = eval.forms().symmetric(&xs[0], &xs[1]).unwrap();
        prop_assert!((both - sym).abs() <= 1e-12 * (1.0 + sym.abs()));
    }

    #[test]
    fn objective_is_strictly_convex((k, xs) in setup(3), alpha in 0.01f64..0.99, theta in 0.0f64..2.0, phi in 0.0f64..2.0) {
        let spec = CostSpec::zero().with_theta(theta).with_penalty(phi);
        let eval = CostEvaluator::new(&k, xs[0].grid()).unwrap();
        let j = |x: &Strategy| eval.objective(&spec, x, &[&xs[2]]).unwrap().as_option().unwrap();
        let mix = xs[0].combine(1.0 - alpha, &xs[1], alpha).unwrap();
        let margin = alpha * j(&xs[1]) + (1.0 - alpha) * j(&xs[0]) - j(&mix);
        let d = xs[1].difference(&xs[0]).unwrap();
        let bound = 0.5 * alpha * (1.0 - alpha) * eval.self_quadratic_form(&d).unwrap();
        prop_assert!(margin >= bound - 1e-10);
    }

    /// Jensen: averaging a randomized schedule never costs more, and with
    /// quadratic costs saves at least the kernel energy of the deviations.
    #[test]
    fn averaging_never_costs_more((k, xs) in setup(3), p in 0.05f64..0.95, theta in 0.0f64..2.0, phi in 0.0f64..2.0) {
        let mixed = RandomizedStrategy::new(vec![(p, xs[0].clone()), (1.0 - p, xs[1].clone())]).unwrap();
        let opponent = RandomizedStrategy::deterministic(xs[2].clone());
        let spec = CostSpec::zero().with_theta(theta).with_penalty(phi);
        let rep = derandomization_gap(&k, &spec, &mixed, &[&opponent]).unwrap();
        let gap = rep.gap.as_option().unwrap();
        prop_assert!(gap >= rep.predicted_kernel_gap - 1e-12);
        prop_assert!(rep.predicted_kernel_gap >= 0.0);
        let rep = derandomization_gap(&k, &CostSpec::zero(), &mixed, &[&opponent]).unwrap();
        prop_assert!((rep.gap.as_option().unwrap() - rep.predicted_kernel_gap).abs() <= 1e-10);
    }

    #[test]
    fn best_response_beats_random_deviations(
        (k, xs) in setup(2),
        theta in 0.1f64..2.0,
        liquidate in any::<bool>(),
    ) {
        let spec = if liquidate {
            CostSpec::zero().with_theta(theta).liquidating()
        } else {
            CostSpec::zero().with_theta(theta).with_penalty(1.0)
        };
        let g = xs[0].grid().clone();
        let game = GameSpec::new(
            k,
            g,
            vec![TraderSpec::new(0.4, spec.clone()), TraderSpec::new(0.4, spec)],
            StrategyClass::Mixed,
        )
        .unwrap();
        let solver = GameSolver::new(&game).unwrap();
        let profile = xs.clone();
        let br = solver.best_response(0, &profile).unwrap();
        let mut with_br = profile.clone();
        with_br[0] = br;
        let best = solver.objective(0, &with_br).unwrap().as_option().unwrap();
        let other = solver.objective(0, &profile).unwrap();
        if let Some(v) = other.as_option() {
            prop_assert!(best <= v + 1e-10);
        }
    }
}
