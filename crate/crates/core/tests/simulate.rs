mod common;

use chp_core::simulate::{sample_run, Policy};
use common::*;
use proptest::prelude::*;

#[test]
fn every_policy_stays_above_the_infimum_and_reproduces() {
    if let Err(e) = dominance(10_000) {
        panic!("{e}");
    }
}

#[test]
fn a_fixed_priority_schedule_is_deterministic_without_coins() {
    let f = exact_fixtures().into_iter().find(|f| f.name == "running").unwrap();
    let policy = Policy::FixedPriority(vec!["C2".into()]);
    // Thread 2 always goes first and spins on the unchanged cell.
    let out = sample_run(&f.program, &f.init, &policy, 1, 50, &f.bounds).unwrap();
    assert_eq!(out.kind, chp_core::simulate::RunKind::Cutoff);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seeds_determine_trajectories(seed in any::<u64>(), which in 0usize..3) {
        let f = exact_fixtures().into_iter().next().unwrap();
        let policy = policies().swap_remove(which);
        let a = sample_run(&f.program, &f.init, &policy, seed, SIM_STEP_CAP, &f.bounds).unwrap();
        let b = sample_run(&f.program, &f.init, &policy, seed, SIM_STEP_CAP, &f.bounds).unwrap();
        prop_assert_eq!(a, b);
    }
}
