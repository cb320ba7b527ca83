//! Workloads shared by the engine benchmarks.

use chp_core::expectation::parse_expectation;
use chp_core::state::parse_initial_state;
use chp_core::syntax::{parse_program, VarName};
use chp_core::{Command, DomainBounds, Expectation, ProgState};

pub struct Workload {
    pub program: Command,
    pub init: ProgState,
    pub post: Expectation,
    pub bounds: DomainBounds,
}

fn fixture(name: &str) -> String {
    let path = format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn load(name: &str, post: &str, bounds: DomainBounds) -> Workload {
    Workload {
        program: parse_program(&fixture(&format!("{name}.chp"))).expect("fixture parses"),
        init: parse_initial_state(&fixture(&format!("{name}.init"))).expect("fixture state parses"),
        post: parse_expectation(&fixture(post)).expect("fixture expectation parses"),
        bounds,
    }
}

pub fn running() -> Workload {
    let b = DomainBounds::new(["r", "y"].map(VarName::from), (-1, 1), [0], 1).expect("valid bounds");
    load("running", "running.exp", b)
}

pub fn jones() -> Workload {
    let b = DomainBounds::new([VarName::from("x")], (-1, 1), [0], 1).expect("valid bounds");
    load("jones", "jones_zero.exp", b)
}

pub fn prodcons() -> Workload {
    load("prodcons", "prodcons.exp", chp_core::proofcheck::producer_consumer_bounds(1))
}
