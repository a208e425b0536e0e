use macoff_core::binary_offload::{solve_binary, solve_full_ma, solve_tdma};
use macoff_core::partial_offload::{solve_mixed, solve_partial, solve_partial_single_user};
use macoff_core::{LocalComputeModel, Mode, RadioLink, Scenario, Scheme, TaskSpec};
use macoff_oracle::{oracle_mixed, oracle_partial_single_user, oracle_single_user, oracle_solve, GridSpec};
use proptest::prelude::*;

const TS: f64 = 1e-6;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn weak_pair(h1: f64) -> Scenario {
    Scenario::new(
        TaskSpec::new(1e6, 2.5).with_exec_time(0.5),
        RadioLink::new(h1, 0.3 * TS),
        TaskSpec::new(1e6, 3.3).with_exec_time(0.5),
        RadioLink::new(0.1, 0.5 * TS),
        0.1 * TS,
        TS,
    )
    .unwrap()
}

fn partial_gain(h1: f64) -> Scenario {
    let m = LocalComputeModel::new(1e-18, 0.0).unwrap();
    Scenario::new(
        TaskSpec::new(2e6, 1.5).with_downlink_time(0.2).with_local_model(m),
        RadioLink::new(h1, 0.5 * TS),
        TaskSpec::new(6e6, 2.0).with_downlink_time(0.2).with_local_model(m),
        RadioLink::new(0.5, 0.5 * TS),
        1e-3 * TS,
        TS,
    )
    .unwrap()
}

#[test]
fn single_user_matches_closed_form() {
    let e = oracle_single_user(1e6, 1e6, 1.0, 2.0, &GridSpec::default()).unwrap();
    assert!(rel(e, 1e6) < 1e-6, "{e}");
    assert!(oracle_single_user(1e6, 1e6, 1.0, 0.5, &GridSpec::default()).is_none());
}

#[test]
fn single_user_partial_matches_solver() {
    let m = 1e-18;
    let s = solve_partial_single_user(1e6, 1.0, 1.0, 1.0, 1e3, m, 0.0, TS);
    let o = oracle_partial_single_user(1e6, 1.0, 1.0, 1.0, 1e3, m, 0.0, TS, &GridSpec::default());
    assert!(rel(s.total(), o) < 1e-4, "{} vs {o}", s.total());
    assert!(s.total() <= o * (1.0 + 1e-9));
}

#[test]
fn weak_pair_tdma_and_full_ma_match_at_moderate_gain() {
    let s = weak_pair(0.4);
    let g = GridSpec::default();
    for (solver, scheme) in [(solve_tdma(&s).unwrap(), Scheme::Tdma), (solve_full_ma(&s).unwrap(), Scheme::FullMa)] {
        let o = oracle_solve(&s, scheme, Mode::Binary, &g).unwrap();
        assert!(solver.feasible && o.feasible, "{scheme}");
        let (a, b) = (solver.total_energy(), o.total_energy());
        assert!(rel(a, b) <= 1e-3, "{scheme}: solver {a}, oracle {b}");
        assert!(o.violations(&s, 1e-6).is_empty(), "{:?}", o.violations(&s, 1e-6));
    }
}

#[test]
fn weak_pair_very_weak_user_one_is_infeasible_for_both() {
    let s = weak_pair(0.05);
    let g = GridSpec::default();
    for scheme in Scheme::ALL {
        assert!(!solve_binary(&s, scheme).unwrap().feasible, "{scheme}");
        let o = oracle_solve(&s, scheme, Mode::Binary, &g).unwrap();
        assert!(!o.feasible, "{scheme}");
        assert_eq!(o.case_trace, "oracle: no feasible grid point");
    }
}

#[test]
fn partial_and_mixed_match_solver() {
    let g = GridSpec::default();
    for h1 in [0.2, 0.5, 2.5] {
        let s = partial_gain(h1);
        for scheme in [Scheme::FullMa, Scheme::Tdma] {
            let sol = solve_partial(&s, scheme).unwrap();
            let o = oracle_solve(&s, scheme, Mode::Partial, &g).unwrap();
            assert!(o.violations(&s, 1e-6).is_empty(), "{:?}", o.violations(&s, 1e-6));
            let (a, b) = (sol.total_energy(), o.total_energy());
            assert!(rel(a, b) <= 1e-3, "partial {scheme} at {h1}: solver {a}, oracle {b}");
            assert!(a <= b * (1.0 + 1e-6), "partial {scheme} at {h1}: solver {a}, oracle {b}");
            for user in 0..2 {
                let sol = solve_mixed(&s, scheme, user).unwrap();
                let o = oracle_mixed(&s, scheme, user, &g).unwrap();
                let (a, b) = (sol.total_energy(), o.total_energy());
                assert!(rel(a, b) <= 1e-3, "mixed {scheme} user {user} at {h1}: solver {a}, oracle {b}");
                assert!(a <= b * (1.0 + 1e-6), "mixed {scheme} user {user} at {h1}: solver {a}, oracle {b}");
            }
        }
    }
}

#[test]
fn unsupported_partial_schemes_are_errors() {
    let s = partial_gain(0.5);
    assert!(oracle_solve(&s, Scheme::Sdwts, Mode::Partial, &GridSpec::default()).is_err());
}

prop_compose! {
    /// Unit noise and symbol interval, so gains are effective gains and
    /// deadlines count channel uses.
    fn arb_scenario()(
        bits in [0.5..4.0f64, 0.5..4.0f64],
        l1 in 1.0..3.0f64,
        gap in 0.0..3.0f64,
        alpha in [0.2..5.0f64, 0.2..5.0f64],
        budget in [0.5..20.0f64, 0.5..20.0f64],
    ) -> Scenario {
        Scenario::new(
            TaskSpec::new(bits[0], l1),
            RadioLink::new(alpha[0], budget[0]),
            TaskSpec::new(bits[1], l1 + gap),
            RadioLink::new(alpha[1], budget[1]),
            1.0,
            1.0,
        )
        .unwrap()
    }
}

fn scaled_budgets(s: &Scenario, f: f64) -> Scenario {
    let u = *s.users();
    let mut l = *s.links();
    for link in &mut l {
        link.power_budget *= f;
    }
    Scenario::new(u[0], l[0], u[1], l[1], s.noise(), s.symbol_interval()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracle_and_solver_agree(s in arb_scenario()) {
        let g = GridSpec::default();
        for scheme in Scheme::ALL {
            let sol = solve_binary(&s, scheme).unwrap();
            // Skip scenarios whose verdict flips within a 1e-6 budget margin.
            let lo = solve_binary(&scaled_budgets(&s, 1.0 - 1e-6), scheme).unwrap().feasible;
            let hi = solve_binary(&scaled_budgets(&s, 1.0 + 1e-6), scheme).unwrap().feasible;
            if lo != hi {
                continue;
            }
            let o = oracle_solve(&s, scheme, Mode::Binary, &g).unwrap();
            prop_assert_eq!(sol.feasible, o.feasible, "{}", scheme);
            if sol.feasible {
                let (a, b) = (sol.total_energy(), o.total_energy());
                prop_assert!(a <= b * (1.0 + 1e-6), "{}: solver {} above oracle {}", scheme, a, b);
                prop_assert!(o.violations(&s, 1e-6).is_empty(), "{:?}", o.violations(&s, 1e-6));
            }
        }
    }
}
