//! Quantitative separation logic expectations: maps from states to [0,1].

mod eval;
pub mod laws;
mod text;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::syntax::{ArithExpr, CmpOp, Guard, ProbExpr, VarName};
use crate::{rat_int, Rat};

pub use eval::{
    entailment_witness, entails, eval, is_precise, is_qualitative, Evaluator, Witness,
};
pub use text::{parse_expectation, parse_predicate};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    Emp,
    /// The heap is exactly e ↦ e0, …, en.
    PointsTo(ArithExpr, Vec<ArithExpr>),
    /// The heap is exactly one cell at e.
    Allocated(ArithExpr),
    EqExpr(ArithExpr, ArithExpr),
    StackGuard(Guard),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Predicate::Emp => {}
            Predicate::PointsTo(e, es) => {
                e.vars(out);
                for x in es {
                    x.vars(out);
                }
            }
            Predicate::Allocated(e) => e.vars(out),
            Predicate::EqExpr(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Predicate::StackGuard(g) => g.vars(out),
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Predicate::Not(a) => a.vars(out),
        }
    }
}

type E = Arc<Expectation>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expectation {
    Const(Rat),
    Iverson(Predicate),
    /// Pointwise sum; evaluating above 1 is an error, never clamped.
    Add(E, E),
    Mul(E, E),
    Max(E, E),
    Min(E, E),
    Pow(E, ArithExpr),
    SepMul(E, E),
    /// Left operand must be qualitative.
    GuardedWand(E, E),
    SupVal(VarName, E),
    InfVal(VarName, E),
    /// E[x/e], evaluated as E(s[x/e(s)], h).
    Subst(E, VarName, ArithExpr),
    /// Iterated ⋆ of the body over x ∈ [lo, hi]; 1 on an empty range.
    BigSepMul(VarName, ArithExpr, ArithExpr, E),
    /// Nonnegative scalar multiple; evaluating above 1 is an error.
    Scale(Rat, E),
}

impl Expectation {
    pub fn constant(q: Rat) -> Self {
        Expectation::Const(q)
    }

    pub fn one() -> Self {
        Expectation::Const(rat_int(1))
    }

    pub fn zero() -> Self {
        Expectation::Const(rat_int(0))
    }

    pub fn emp() -> Self {
        Expectation::Iverson(Predicate::Emp)
    }

    pub fn iverson(p: Predicate) -> Self {
        Expectation::Iverson(p)
    }

    pub fn guard(g: Guard) -> Self {
        Expectation::Iverson(Predicate::StackGuard(g))
    }

    pub fn eq(a: impl Into<ArithExpr>, b: impl Into<ArithExpr>) -> Self {
        Expectation::Iverson(Predicate::EqExpr(a.into(), b.into()))
    }

    pub fn cmp(op: CmpOp, a: impl Into<ArithExpr>, b: impl Into<ArithExpr>) -> Self {
        Expectation::guard(Guard::cmp(op, a, b))
    }

    pub fn points_to(e: impl Into<ArithExpr>, vals: Vec<ArithExpr>) -> Self {
        Expectation::Iverson(Predicate::PointsTo(e.into(), vals))
    }

    pub fn pts(e: impl Into<ArithExpr>, v: impl Into<ArithExpr>) -> Self {
        Expectation::points_to(e, vec![v.into()])
    }

    pub fn allocated(e: impl Into<ArithExpr>) -> Self {
        Expectation::Iverson(Predicate::Allocated(e.into()))
    }

    pub fn add(a: Expectation, b: Expectation) -> Self {
        Expectation::Add(Arc::new(a), Arc::new(b))
    }

    pub fn mul(a: Expectation, b: Expectation) -> Self {
        Expectation::Mul(Arc::new(a), Arc::new(b))
    }

    pub fn max(a: Expectation, b: Expectation) -> Self {
        Expectation::Max(Arc::new(a), Arc::new(b))
    }

    pub fn min(a: Expectation, b: Expectation) -> Self {
        Expectation::Min(Arc::new(a), Arc::new(b))
    }

    pub fn pow(a: Expectation, n: impl Into<ArithExpr>) -> Self {
        Expectation::Pow(Arc::new(a), n.into())
    }

    pub fn sep(a: Expectation, b: Expectation) -> Self {
        Expectation::SepMul(Arc::new(a), Arc::new(b))
    }

    pub fn wand(guard: Expectation, body: Expectation) -> Self {
        Expectation::GuardedWand(Arc::new(guard), Arc::new(body))
    }

    pub fn sup(x: &VarName, body: Expectation) -> Self {
        Expectation::SupVal(x.clone(), Arc::new(body))
    }

    pub fn inf(x: &VarName, body: Expectation) -> Self {
        Expectation::InfVal(x.clone(), Arc::new(body))
    }

    pub fn subst(self, x: &VarName, e: impl Into<ArithExpr>) -> Self {
        Expectation::Subst(Arc::new(self), x.clone(), e.into())
    }

    pub fn big_sep(x: &VarName, lo: impl Into<ArithExpr>, hi: impl Into<ArithExpr>, body: Expectation) -> Self {
        Expectation::BigSepMul(x.clone(), lo.into(), hi.into(), Arc::new(body))
    }

    pub fn scale(a: Rat, body: Expectation) -> Self {
        Expectation::Scale(a, Arc::new(body))
    }

    /// Max over a nonempty list.
    pub fn max_all(items: impl IntoIterator<Item = Expectation>) -> Self {
        items.into_iter().reduce(Expectation::max).expect("max over an empty list")
    }

    /// Sum over a list; 0 when empty.
    pub fn sum_all(items: impl IntoIterator<Item = Expectation>) -> Self {
        items.into_iter().reduce(Expectation::add).unwrap_or_else(Expectation::zero)
    }

    /// Probability expression as an expectation, via guarded case splits.
    pub fn from_prob(p: &ProbExpr) -> Self {
        match p {
            ProbExpr::Lit(q) => Expectation::Const(q.clone()),
            ProbExpr::Cond(g, a, b) => Expectation::add(
                Expectation::mul(Expectation::guard(g.clone()), Expectation::from_prob(a)),
                Expectation::mul(Expectation::guard(Guard::not(g.clone())), Expectation::from_prob(b)),
            ),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Expectation::Const(_) => {}
            Expectation::Iverson(p) => p.vars(out),
            Expectation::Add(a, b)
            | Expectation::Mul(a, b)
            | Expectation::Max(a, b)
            | Expectation::Min(a, b)
            | Expectation::SepMul(a, b)
            | Expectation::GuardedWand(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expectation::Pow(a, n) => {
                a.collect_vars(out);
                n.vars(out);
            }
            Expectation::SupVal(x, a) | Expectation::InfVal(x, a) => {
                let mut inner = a.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Expectation::Subst(a, x, e) => {
                let mut inner = a.free_vars();
                inner.remove(x);
                out.extend(inner);
                e.vars(out);
            }
            Expectation::BigSepMul(x, lo, hi, a) => {
                lo.vars(out);
                hi.vars(out);
                let mut inner = a.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            Expectation::Scale(_, a) => a.collect_vars(out),
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Expectation::SupVal(x, a) | Expectation::InfVal(x, a) => {
                out.insert(x.clone());
                a.all_names(out);
            }
            Expectation::Subst(a, x, e) => {
                out.insert(x.clone());
                e.vars(out);
                a.all_names(out);
            }
            Expectation::BigSepMul(x, lo, hi, a) => {
                out.insert(x.clone());
                lo.vars(out);
                hi.vars(out);
                a.all_names(out);
            }
            Expectation::Add(a, b)
            | Expectation::Mul(a, b)
            | Expectation::Max(a, b)
            | Expectation::Min(a, b)
            | Expectation::SepMul(a, b)
            | Expectation::GuardedWand(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Expectation::Pow(a, n) => {
                a.all_names(out);
                n.vars(out);
            }
            Expectation::Scale(_, a) => a.all_names(out),
            Expectation::Const(_) | Expectation::Iverson(_) => self.collect_vars(out),
        }
    }
}

pub fn fv_exp(e: &Expectation) -> BTreeSet<VarName> {
    e.free_vars()
}

pub fn subst_exp(e: &Expectation, x: &VarName, by: &ArithExpr) -> Expectation {
    e.clone().subst(x, by.clone())
}

/// A variable name based on `base` that does not occur in `avoid`.
pub fn fresh_var(base: &str, avoid: &BTreeSet<VarName>) -> VarName {
    let mut name = base.to_string();
    loop {
        let v = VarName::from(name.as_str());
        if !avoid.contains(&v) {
            return v;
        }
        name.push('\'');
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::print(self))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::print_pred(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_variables_are_syntactic() {
        let e = Expectation::pts(ArithExpr::add(ArithExpr::var("z2"), ArithExpr::var("i")), 0);
        assert_eq!(fv_exp(&e), BTreeSet::from(["z2".into(), "i".into()]));
        let bound = Expectation::big_sep(&"i".into(), 0, ArithExpr::var("k"), e);
        assert_eq!(fv_exp(&bound), BTreeSet::from(["z2".into(), "k".into()]));
        let s = Expectation::eq(ArithExpr::var("x"), ArithExpr::var("y")).subst(&"x".into(), 3);
        assert_eq!(fv_exp(&s), BTreeSet::from(["y".into()]));
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let avoid = BTreeSet::from(["v".into(), "v'".into()]);
        assert_eq!(fresh_var("v", &avoid).as_str(), "v''");
    }
}
