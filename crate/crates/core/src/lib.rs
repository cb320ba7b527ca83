//! Verification toolkit for chpGCL, a concurrent probabilistic guarded command
//! language with a heap. The crate executes the MDP semantics, evaluates
//! quantitative separation logic expectations over bounded domains, brackets
//! weakest liberal preexpectations and checks lower-bound derivations.

mod absorb;
pub mod analysis;
pub mod error;
pub mod expectation;
pub mod proofcheck;
pub mod semantics;
pub mod simulate;
pub mod state;
pub mod syntax;

pub use error::{Error, Result};
pub use expectation::{Expectation, Predicate};
pub use semantics::{ActionLabel, Config, TransitionDist};
pub use state::{DomainBounds, Heap, ProgState, Stack};
pub use syntax::{ArithExpr, CmpOp, Command, Guard, ProbExpr, VarName};

/// Exact rational used for every probability and expectation value.
pub type Rat = num::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(n.into())
}
