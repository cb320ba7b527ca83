//! Abstract syntax of chpGCL with its text format and static predicates.

mod lexer;
mod parser;
mod pretty;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::Rat;

pub use lexer::{Lexer, Tok, Token};
pub use parser::{parse_arith, parse_guard, parse_prob, parse_program, Parser};

pub const KEYWORDS: &[&str] = &[
    "skip", "diverge", "atomic", "if", "else", "while", "new", "free", "true", "false", "emp",
    "max", "min", "sup", "inf", "bigstar", "in",
];

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarName(Arc<str>);

impl VarName {
    pub fn new(name: &str) -> Result<Self> {
        let mut chars = name.chars();
        let head_ok = chars
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
        if !head_ok || !tail_ok {
            return Err(Error::Input(format!("invalid variable name `{name}`")));
        }
        if KEYWORDS.contains(&name) {
            return Err(Error::Input(format!("`{name}` is a reserved word")));
        }
        Ok(VarName(name.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Panics on invalid names; meant for literals in code and tests.
impl From<&str> for VarName {
    fn from(name: &str) -> Self {
        VarName::new(name).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArithExpr {
    Lit(i64),
    Var(VarName),
    Add(Box<ArithExpr>, Box<ArithExpr>),
    Sub(Box<ArithExpr>, Box<ArithExpr>),
    Mul(Box<ArithExpr>, Box<ArithExpr>),
}

impl ArithExpr {
    pub fn var(name: &str) -> Self {
        ArithExpr::Var(name.into())
    }

    pub fn add(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: ArithExpr, b: ArithExpr) -> Self {
        ArithExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            ArithExpr::Lit(_) => {}
            ArithExpr::Var(x) => {
                out.insert(x.clone());
            }
            ArithExpr::Add(a, b) | ArithExpr::Sub(a, b) | ArithExpr::Mul(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// Replaces every read of `x` by `e`.
    pub fn subst(&self, x: &VarName, e: &ArithExpr) -> ArithExpr {
        match self {
            ArithExpr::Lit(_) => self.clone(),
            ArithExpr::Var(y) if y == x => e.clone(),
            ArithExpr::Var(_) => self.clone(),
            ArithExpr::Add(a, b) => ArithExpr::add(a.subst(x, e), b.subst(x, e)),
            ArithExpr::Sub(a, b) => ArithExpr::sub(a.subst(x, e), b.subst(x, e)),
            ArithExpr::Mul(a, b) => ArithExpr::mul(a.subst(x, e), b.subst(x, e)),
        }
    }
}

impl From<i64> for ArithExpr {
    fn from(n: i64) -> Self {
        ArithExpr::Lit(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    False,
    Cmp(CmpOp, ArithExpr, ArithExpr),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

impl Guard {
    pub fn cmp(op: CmpOp, a: impl Into<ArithExpr>, b: impl Into<ArithExpr>) -> Self {
        Guard::Cmp(op, a.into(), b.into())
    }

    pub fn and(a: Guard, b: Guard) -> Self {
        Guard::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Guard, b: Guard) -> Self {
        Guard::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Guard) -> Self {
        Guard::Not(Box::new(a))
    }

    pub fn vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Cmp(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Guard::Not(a) => a.vars(out),
        }
    }

    pub fn subst(&self, x: &VarName, e: &ArithExpr) -> Guard {
        match self {
            Guard::True | Guard::False => self.clone(),
            Guard::Cmp(op, a, b) => Guard::Cmp(*op, a.subst(x, e), b.subst(x, e)),
            Guard::And(a, b) => Guard::and(a.subst(x, e), b.subst(x, e)),
            Guard::Or(a, b) => Guard::or(a.subst(x, e), b.subst(x, e)),
            Guard::Not(a) => Guard::not(a.subst(x, e)),
        }
    }
}

/// Stack-dependent probability: a literal or a case split on a guard.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProbExpr {
    Lit(Rat),
    Cond(Guard, Box<ProbExpr>, Box<ProbExpr>),
}

impl ProbExpr {
    pub fn vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            ProbExpr::Lit(_) => {}
            ProbExpr::Cond(g, a, b) => {
                g.vars(out);
                a.vars(out);
                b.vars(out);
            }
        }
    }

    /// The expression 1 − self.
    pub fn complement(&self) -> ProbExpr {
        match self {
            ProbExpr::Lit(q) => ProbExpr::Lit(crate::rat_int(1) - q),
            ProbExpr::Cond(g, a, b) => {
                ProbExpr::Cond(g.clone(), Box::new(a.complement()), Box::new(b.complement()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Terminated,
    Diverge,
    Assign(VarName, ArithExpr),
    ProbChoice(Arc<Command>, ProbExpr, Arc<Command>),
    Seq(Arc<Command>, Arc<Command>),
    Atomic(Arc<Command>),
    IfThenElse(Guard, Arc<Command>, Arc<Command>),
    While(Guard, Arc<Command>),
    Concurrent(Arc<Command>, Arc<Command>),
    Alloc(VarName, Vec<ArithExpr>),
    Free(ArithExpr),
    Lookup(VarName, ArithExpr),
    Mutate(ArithExpr, ArithExpr),
}

impl Command {
    pub fn seq(a: Command, b: Command) -> Self {
        Command::Seq(Arc::new(a), Arc::new(b))
    }

    /// Right-nested sequence of the given commands; `skip` when empty.
    pub fn seq_all(cmds: impl IntoIterator<Item = Command>) -> Self {
        let mut cmds: Vec<Command> = cmds.into_iter().collect();
        let Some(mut acc) = cmds.pop() else {
            return Command::Terminated;
        };
        while let Some(c) = cmds.pop() {
            acc = Command::seq(c, acc);
        }
        acc
    }

    pub fn prob(a: Command, p: Rat, b: Command) -> Self {
        Command::ProbChoice(Arc::new(a), ProbExpr::Lit(p), Arc::new(b))
    }

    pub fn atomic(c: Command) -> Self {
        Command::Atomic(Arc::new(c))
    }

    pub fn ite(g: Guard, a: Command, b: Command) -> Self {
        Command::IfThenElse(g, Arc::new(a), Arc::new(b))
    }

    pub fn while_loop(g: Guard, body: Command) -> Self {
        Command::While(g, Arc::new(body))
    }

    pub fn par(a: Command, b: Command) -> Self {
        Command::Concurrent(Arc::new(a), Arc::new(b))
    }

    pub fn assign(x: &str, e: impl Into<ArithExpr>) -> Self {
        Command::Assign(x.into(), e.into())
    }

    pub fn lookup(x: &str, e: impl Into<ArithExpr>) -> Self {
        Command::Lookup(x.into(), e.into())
    }

    pub fn mutate(e: impl Into<ArithExpr>, v: impl Into<ArithExpr>) -> Self {
        Command::Mutate(e.into(), v.into())
    }

    pub fn children(&self) -> Vec<&Command> {
        match self {
            Command::ProbChoice(a, _, b)
            | Command::Seq(a, b)
            | Command::IfThenElse(_, a, b)
            | Command::Concurrent(a, b) => vec![a, b],
            Command::Atomic(a) | Command::While(_, a) => vec![a],
            _ => vec![],
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn is_probabilistic(&self) -> bool {
        matches!(self, Command::ProbChoice(..)) || self.children().iter().any(|c| c.is_probabilistic())
    }
}

pub fn written_vars(c: &Command) -> BTreeSet<VarName> {
    let mut out = BTreeSet::new();
    collect_written(c, &mut out);
    out
}

fn collect_written(c: &Command, out: &mut BTreeSet<VarName>) {
    match c {
        Command::Assign(x, _) | Command::Lookup(x, _) | Command::Alloc(x, _) => {
            out.insert(x.clone());
        }
        _ => {
            for child in c.children() {
                collect_written(child, out);
            }
        }
    }
}

pub fn free_vars_cmd(c: &Command) -> BTreeSet<VarName> {
    let mut out = BTreeSet::new();
    collect_free(c, &mut out);
    out
}

fn collect_free(c: &Command, out: &mut BTreeSet<VarName>) {
    match c {
        Command::Terminated | Command::Diverge => {}
        Command::Assign(x, e) | Command::Lookup(x, e) => {
            out.insert(x.clone());
            e.vars(out);
        }
        Command::Alloc(x, es) => {
            out.insert(x.clone());
            for e in es {
                e.vars(out);
            }
        }
        Command::Free(e) => e.vars(out),
        Command::Mutate(a, b) => {
            a.vars(out);
            b.vars(out);
        }
        Command::ProbChoice(a, p, b) => {
            p.vars(out);
            collect_free(a, out);
            collect_free(b, out);
        }
        Command::IfThenElse(g, a, b) => {
            g.vars(out);
            collect_free(a, out);
            collect_free(b, out);
        }
        Command::While(g, a) => {
            g.vars(out);
            collect_free(a, out);
        }
        Command::Seq(a, b) | Command::Concurrent(a, b) => {
            collect_free(a, out);
            collect_free(b, out);
        }
        Command::Atomic(a) => collect_free(a, out),
    }
}

/// No allocation and no concurrency anywhere in the tree.
pub fn is_tame(c: &Command) -> bool {
    match c {
        Command::Alloc(..) | Command::Concurrent(..) => false,
        _ => c.children().into_iter().all(is_tame),
    }
}

/// The primitive commands whose every step ends in a final configuration.
pub fn is_terminating_atom(c: &Command) -> bool {
    matches!(
        c,
        Command::Assign(..)
            | Command::Lookup(..)
            | Command::Mutate(..)
            | Command::Free(..)
            | Command::Alloc(..)
    )
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::command(self))
    }
}

impl fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::arith(self))
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::guard(self))
    }
}

impl fmt::Display for ProbExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::prob(self))
    }
}

pub use pretty::rational as fmt_rational;
