mod common;

use chp_core::expectation::{is_precise, is_qualitative, Evaluator};
use common::*;
use num::{One, Zero};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn separation_laws_hold(inp in arb_law_inputs()) {
        law_case(&inp).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generated_expectations_stay_in_the_unit_interval(x in arb_expectation()) {
        let b = small_bounds();
        let ev = Evaluator::new(&b);
        for st in all_states(&b) {
            let v = ev.eval_state(&x, &st).unwrap();
            prop_assert!(v >= num::BigRational::zero() && v <= num::BigRational::one());
        }
    }

    #[test]
    fn qualitative_generator_is_qualitative(phi in arb_qualitative()) {
        prop_assert!(is_qualitative(&phi, &small_bounds()).unwrap());
    }

    #[test]
    fn precise_generator_is_precise(e in arb_precise()) {
        prop_assert!(is_precise(&e, &small_bounds()).unwrap());
    }
}
