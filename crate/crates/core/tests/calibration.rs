use approx::assert_relative_eq;
use mlgibbs::calibration::{calibrate_penalized, calibrate_weak_ii, regime_constants, DEFAULT_C_R, MAX_LEVELS};
use mlgibbs::{cost_of, LevelSchedule, PotentialModel};
use proptest::prelude::*;

#[test]
fn penalized_plans_tighten_as_epsilon_shrinks() {
    let mut previous: Option<(f64, usize, u64)> = None;
    for eps in [0.4, 0.2, 0.1, 0.05] {
        let plan = calibrate_penalized(eps, 1.0, 1, 0.75, 1.0).unwrap();
        let cost = cost_of(&plan.schedule);
        if let Some((alpha, levels, c)) = previous {
            assert!(plan.alpha < alpha);
            assert!(plan.schedule.levels() >= levels);
            assert!(cost > c);
        }
        previous = Some((plan.alpha, plan.schedule.levels(), cost));
    }
}

#[test]
fn weak_ii_schedule_on_the_power_potential() {
    let m = PotentialModel::power(1, 0.75).unwrap();
    let c = regime_constants(m.profile(), 1, 1.0, DEFAULT_C_R).unwrap();
    assert_relative_eq!(c.gamma_star, 1.0 / 9.0, max_relative = 1e-15);
    assert_eq!(c.psi_bar, 4.0);
    let s = calibrate_weak_ii(0.2, 0.1, 0.5, c.gamma_star, &c, m.profile()).unwrap();
    assert_eq!(s.levels(), 6);
    // Stored horizons are rounded up to the grid of γ_0.
    let raw = 979.472365915378488;
    assert!(s.horizons()[0] >= raw && s.horizons()[0] < raw + c.gamma_star);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_schedules_sit_on_their_grids(
        gamma0 in 0.01f64..1.0,
        levels in 0usize..8,
        t0 in 1.0f64..100.0,
        rho in 0.0f64..=1.0,
    ) {
        let s = LevelSchedule::geometric(gamma0, levels, t0, rho, 0.0).unwrap();
        prop_assert_eq!(s.levels(), levels);
        for j in 0..=levels {
            let g = s.coarse_gamma(j);
            let n = s.horizons()[j] / g;
            prop_assert!((n - n.round()).abs() < 1e-6, "level {} horizon {} gamma {}", j, s.horizons()[j], g);
            prop_assert!(s.horizons()[j] >= g);
            if j > 0 {
                prop_assert_eq!(s.gammas()[j], s.gammas()[j - 1] / 2.0);
                prop_assert!(s.horizons()[j] <= s.horizons()[j - 1] + g);
            }
        }
        let wider = s.scaled(4.0).unwrap();
        prop_assert!(cost_of(&wider) >= 3 * cost_of(&s));
    }

    #[test]
    fn invalid_schedules_are_rejected(rho in 1.0001f64..5.0) {
        prop_assert!(LevelSchedule::geometric(0.1, 2, 10.0, rho, 0.0).is_err());
        prop_assert!(LevelSchedule::geometric(0.1, MAX_LEVELS + 1, 10.0, 0.5, 0.0).is_err());
    }
}
