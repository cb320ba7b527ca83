use crate::state::Heap;
use crate::syntax::VarName;
use crate::Rat;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared variable `{0}`")]
    Undeclared(VarName),
    #[error("heaps overlap at location {0}")]
    Overlap(i64),
    #[error("value {value} outside [0,1] in {what}")]
    OutOfRange { what: String, value: Rat },
    #[error("negative exponent {0}")]
    NegativeExponent(i64),
    #[error("wand guard is not qualitative: {0}")]
    NonQualitative(String),
    #[error("action `{0}` is not enabled")]
    ActionNotEnabled(String),
    #[error("state space exceeded the node cap ({0} nodes)")]
    StateSpaceExceeded(usize),
    #[error("atomic body is not tame")]
    NotTame,
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("heap {0} is outside the bounded universe")]
    HeapOutOfBounds(Heap),
    #[error("{0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
