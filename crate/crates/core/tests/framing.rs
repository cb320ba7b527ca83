mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn non_probabilistic_steps_commute_with_frames(c in arb_command(false, true)) {
        frame_case(&c).map_err(TestCaseError::fail)?;
    }
}
