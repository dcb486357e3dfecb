use proptest::prelude::*;
use rlsk::formats::{
    read_policy_csv, read_policy_json, read_runtime_csv, write_policy_csv, write_policy_json,
    write_runtime_csv,
};
use rlsk_core::state::index;
use rlsk_core::{Policy, RuntimeTable, StateSpace};

fn radii(space: StateSpace) -> impl Strategy<Value = Policy> {
    (1usize..=7).prop_flat_map(move |n| {
        let len = match space {
            StateSpace::Level => n,
            StateSpace::LoOm => index::non_optimal(n),
            StateSpace::Bits => (1 << n) - 1,
        };
        prop::collection::vec(1..=n, len)
            .prop_map(move |r| Policy::from_radii(n, space, r).unwrap())
    })
}

fn any_policy() -> impl Strategy<Value = Policy> {
    prop_oneof![
        radii(StateSpace::Level),
        radii(StateSpace::LoOm),
        radii(StateSpace::Bits)
    ]
}

proptest! {
    #[test]
    fn policy_json_round_trip(p in any_policy()) {
        let mut buf = Vec::new();
        write_policy_json(&p, &mut buf).unwrap();
        prop_assert_eq!(read_policy_json(&buf[..]).unwrap(), p);
    }

    #[test]
    fn policy_csv_round_trip(p in prop_oneof![radii(StateSpace::Level), radii(StateSpace::LoOm)]) {
        let mut buf = Vec::new();
        write_policy_csv(&p, &mut buf).unwrap();
        prop_assert_eq!(read_policy_csv(&buf[..]).unwrap(), p);
    }

    #[test]
    fn runtime_csv_round_trip(n in 1usize..=9, seed in prop::collection::vec(0.0f64..1e6, 55)) {
        let mut values: Vec<f64> = (0..index::count(n)).map(|t| seed[t % seed.len()] * (t as f64 + 0.5)).collect();
        *values.last_mut().unwrap() = 0.0;
        if n > 2 {
            values[1] = f64::INFINITY;
        }
        let t = RuntimeTable::new(n, StateSpace::LoOm, values).unwrap();
        let mut buf = Vec::new();
        write_runtime_csv(&t, &mut buf).unwrap();
        prop_assert_eq!(read_runtime_csv(&buf[..]).unwrap(), t);
    }
}
