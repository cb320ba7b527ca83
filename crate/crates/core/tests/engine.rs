mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn unrolling_oracle_agrees(c in arb_small_program(true, false, 8), post in arb_expectation()) {
        oracle_case(&c, &post).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn values_are_one_bounded_and_antitone(c in arb_small_program(true, true, 8), post in arb_expectation()) {
        bounded_antitone_case(&c, &post).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn monotone_in_the_postexpectation(
        c in arb_small_program(true, true, 8),
        x in arb_expectation(),
        z in arb_expectation(),
    ) {
        monotone_case(&c, &x, &z).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn unrolling_oracle_agrees_on_corner_cases() {
    let programs = [
        "atomic { {a := 1} [1/2] {diverge} }",
        "atomic { skip; skip }",
        "atomic { a := new(1) }",
        "skip; skip",
        "{ a := new(1) } ||| { <a> := 0 }",
        "{ b := <0> } ||| { free(0) }",
        "{ atomic { <0> := 1; a := <1> } } ||| { b := 1 }",
        "a := new(0, 1); { <a + 1> := b } [1/3] { free(a) }",
        "while (a < 1) { {a := a + 1} [1/2] {b := <a>} }",
    ];
    let posts = ["[a = 1]", "[b = 0] * [0 |-> 1]", "1/2 * [emp]", "[a = b] ** 1"];
    for text in programs {
        let c = chp_core::syntax::parse_program(text).unwrap();
        for post in posts {
            let post = chp_core::expectation::parse_expectation(post).unwrap();
            oracle_case(&c, &post).unwrap_or_else(|e| panic!("{e}"));
        }
    }
}
