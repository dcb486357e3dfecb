use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rlsk_core::combinatorics::BinomialTable;
use rlsk_core::policy::{always_one_policy, Portfolio};
use rlsk_core::runtime::total_with_convention;
use rlsk_core::solvers::{evaluate_policy_loom, solve_lo_nonstrict_heuristic, solve_lo_strict};
use rlsk_core::state::{full_distribution, index, start_probability_exact};
use rlsk_core::{Setting, StateLoOm, TotalConvention};

#[test]
fn start_distribution_sums_to_one() {
    for n in 1..=20 {
        let total = index::descending(n).fold(BigRational::zero(), |acc, s| {
            acc + start_probability_exact(n, s.i, s.j).unwrap()
        });
        assert!(total.is_one(), "n{n}");
    }
}

#[test]
fn n2_totals_by_convention() {
    let t = evaluate_policy_loom(2, &always_one_policy(2).unwrap()).unwrap();
    assert_eq!(
        total_with_convention(&t, TotalConvention::Uniform)
            .unwrap()
            .value(),
        1.75
    );
    assert_eq!(
        total_with_convention(&t, TotalConvention::OmitZeroTail)
            .unwrap()
            .value(),
        0.5
    );
}

#[test]
fn strict_beats_standard_selection() {
    for n in [8, 16, 32] {
        let strict = solve_lo_strict(n, &Portfolio::full(n))
            .unwrap()
            .total
            .value();
        let standard = solve_lo_nonstrict_heuristic(n, &Portfolio::full(n), 50)
            .unwrap()
            .total
            .value();
        assert!(strict < standard, "n{n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitions_are_normalised(n in 1usize..=12, pick in any::<prop::sample::Index>(), k_pick in any::<prop::sample::Index>()) {
        let table = BinomialTable::new(n);
        let s: StateLoOm = index::state(n, pick.index(index::non_optimal(n)));
        let k = 1 + k_pick.index(n);
        for setting in Setting::BENCHMARKS {
            let d = full_distribution(setting, n, s, k, &table).unwrap();
            let sum: f64 = d.entries.iter().map(|(_, p)| p).sum::<f64>() + d.stay_probability;
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            for (t, p) in &d.entries {
                prop_assert!((0.0..=1.0).contains(p));
                prop_assert!(setting.accepts(s, *t));
            }
        }
    }
}
