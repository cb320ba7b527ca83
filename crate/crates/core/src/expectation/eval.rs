use std::cell::{OnceCell, RefCell};
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num::{One, Zero};

use super::{Expectation, Predicate};
use crate::error::{Error, Result};
use crate::state::{enumerate_heaps, enumerate_stacks, eval_arith, eval_guard, DomainBounds, Heap, ProgState, Stack};
use crate::syntax::ArithExpr;
use crate::Rat;

/// Exact evaluator bound to one universe. Separating products only visit
/// splits in which an operand can be nonzero, and wands only visit the
/// extensions on which their guard holds; both are exact shortcuts of the
/// exhaustive definitions.
pub struct Evaluator<'a> {
    bounds: &'a DomainBounds,
    universe: OnceCell<Vec<Heap>>,
    qualitative: RefCell<HashMap<Expectation, bool>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(bounds: &'a DomainBounds) -> Self {
        Evaluator { bounds, universe: OnceCell::new(), qualitative: RefCell::new(HashMap::new()) }
    }

    pub fn bounds(&self) -> &DomainBounds {
        self.bounds
    }

    pub fn universe(&self) -> &[Heap] {
        self.universe.get_or_init(|| enumerate_heaps(self.bounds))
    }

    pub fn eval_state(&self, e: &Expectation, st: &ProgState) -> Result<Rat> {
        self.eval(e, &st.stack, &st.heap)
    }

    pub fn eval(&self, e: &Expectation, s: &Stack, h: &Heap) -> Result<Rat> {
        let one = Rat::one();
        Ok(match e {
            Expectation::Const(q) => {
                if q.is_negative_or_above_one() {
                    return Err(Error::OutOfRange { what: "constant".into(), value: q.clone() });
                }
                q.clone()
            }
            Expectation::Iverson(p) => indicator(self.pred(p, s, h)?),
            Expectation::Add(a, b) => {
                let v = self.eval(a, s, h)? + self.eval(b, s, h)?;
                if v > one {
                    return Err(Error::OutOfRange { what: format!("sum `{e}` at {s} {h}"), value: v });
                }
                v
            }
            Expectation::Mul(a, b) => {
                let x = self.eval(a, s, h)?;
                if x.is_zero() {
                    x
                } else {
                    x * self.eval(b, s, h)?
                }
            }
            Expectation::Max(a, b) => {
                let x = self.eval(a, s, h)?;
                if x == one {
                    x
                } else {
                    x.max(self.eval(b, s, h)?)
                }
            }
            Expectation::Min(a, b) => {
                let x = self.eval(a, s, h)?;
                if x.is_zero() {
                    x
                } else {
                    x.min(self.eval(b, s, h)?)
                }
            }
            Expectation::Pow(a, n) => {
                let k = eval_arith(n, s)?;
                if k < 0 {
                    return Err(Error::NegativeExponent(k));
                }
                if k == 0 {
                    one
                } else {
                    num::traits::Pow::pow(self.eval(a, s, h)?, k as u32)
                }
            }
            Expectation::SepMul(a, b) => self.sep(a, b, s, h)?,
            Expectation::GuardedWand(g, body) => self.wand(g, body, s, h)?,
            Expectation::SupVal(x, a) => {
                let mut best = Rat::zero();
                for v in self.bounds.value_range() {
                    best = best.max(self.eval(a, &s.bind(x, v), h)?);
                    if best == one {
                        break;
                    }
                }
                best
            }
            Expectation::InfVal(x, a) => {
                let mut best = one;
                for v in self.bounds.value_range() {
                    best = best.min(self.eval(a, &s.bind(x, v), h)?);
                    if best.is_zero() {
                        break;
                    }
                }
                best
            }
            Expectation::Subst(a, x, by) => self.eval(a, &s.bind(x, eval_arith(by, s)?), h)?,
            Expectation::BigSepMul(..) => match unfold_big_sep(e, s)? {
                Some(unfolded) => self.eval(&unfolded, s, h)?,
                None => one,
            },
            Expectation::Scale(q, a) => {
                let v = q * self.eval(a, s, h)?;
                if v.is_negative_or_above_one() {
                    return Err(Error::OutOfRange { what: format!("scaling `{e}`"), value: v });
                }
                v
            }
        })
    }

    pub fn pred(&self, p: &Predicate, s: &Stack, h: &Heap) -> Result<bool> {
        Ok(match p {
            Predicate::Emp => h.is_empty(),
            Predicate::PointsTo(e, vals) => {
                let base = eval_arith(e, s)?;
                if h.len() != vals.len() {
                    return Ok(false);
                }
                for (i, v) in vals.iter().enumerate() {
                    if h.get(base + i as i64) != Some(eval_arith(v, s)?) {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Allocated(e) => h.len() == 1 && h.contains(eval_arith(e, s)?),
            Predicate::EqExpr(a, b) => eval_arith(a, s)? == eval_arith(b, s)?,
            Predicate::StackGuard(g) => eval_guard(g, s)?,
            Predicate::And(a, b) => self.pred(a, s, h)? && self.pred(b, s, h)?,
            Predicate::Or(a, b) => self.pred(a, s, h)? || self.pred(b, s, h)?,
            Predicate::Not(a) => !self.pred(a, s, h)?,
        })
    }

    fn sep(&self, a: &Expectation, b: &Expectation, s: &Stack, h: &Heap) -> Result<Rat> {
        let one = Rat::one();
        let mut best = Rat::zero();
        let mut consider = |h1: &Heap, h2: &Heap| -> Result<bool> {
            let x = self.eval(a, s, h1)?;
            if !x.is_zero() && x.clone() > best {
                let v = x * self.eval(b, s, h2)?;
                if v > best {
                    best = v;
                }
            }
            Ok(best == one)
        };
        if let Some(left) = self.support(a, s, h)? {
            for h1 in left {
                if consider(&h1, &h1.remainder_in(h))? {
                    break;
                }
            }
        } else if let Some(right) = self.support(b, s, h)? {
            for h2 in right {
                if consider(&h2.remainder_in(h), &h2)? {
                    break;
                }
            }
        } else {
            for (h1, h2) in h.splits() {
                if consider(&h1, &h2)? {
                    break;
                }
            }
        }
        Ok(best)
    }

    fn wand(&self, g: &Expectation, body: &Expectation, s: &Stack, h: &Heap) -> Result<Rat> {
        let mut best = Rat::one();
        for ext in self.guard_extensions(g, s, h)? {
            let v = self.eval(body, s, &h.union(&ext)?)?;
            if v < best {
                best = v;
                if best.is_zero() {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Heaps h' of the universe disjoint from `h` with g(s, h') = 1, for a
    /// qualitative `g`.
    pub fn guard_extensions(&self, g: &Expectation, s: &Stack, h: &Heap) -> Result<Vec<Heap>> {
        self.ensure_qualitative(g)?;
        let candidates = match self.models(g, s)? {
            Some(hs) => hs,
            None => self.universe().to_vec(),
        };
        let mut out = Vec::new();
        for ext in candidates {
            if ext.disjoint(h) && self.bounds.contains_heap(&ext) && self.eval(g, s, &ext)?.is_one() {
                out.push(ext);
            }
        }
        Ok(out)
    }

    /// Subheaps h2 of `h` with g(s, h2) = 1, for a qualitative `g`.
    pub fn guard_subheaps(&self, g: &Expectation, s: &Stack, h: &Heap) -> Result<Vec<Heap>> {
        self.ensure_qualitative(g)?;
        let candidates = match self.support(g, s, h)? {
            Some(hs) => hs,
            None => h.splits().into_iter().map(|(a, _)| a).collect(),
        };
        let mut out = Vec::new();
        for sub in candidates {
            if self.eval(g, s, &sub)?.is_one() {
                out.push(sub);
            }
        }
        Ok(out)
    }

    /// Subheaps of `h` outside of which `e` is certainly 0, or None if every
    /// subheap has to be considered.
    pub fn support(&self, e: &Expectation, s: &Stack, h: &Heap) -> Result<Option<Vec<Heap>>> {
        Ok(match e {
            Expectation::Const(q) => q.is_zero().then(Vec::new),
            Expectation::Iverson(p) => self.pred_support(p, s, h)?,
            Expectation::Add(a, b) | Expectation::Max(a, b) => {
                match (self.support(a, s, h)?, self.support(b, s, h)?) {
                    (Some(x), Some(y)) => Some(union_heaps(x, y)),
                    _ => None,
                }
            }
            Expectation::Mul(a, b) | Expectation::Min(a, b) => {
                intersect_supports(self.support(a, s, h)?, || self.support(b, s, h))?
            }
            Expectation::Pow(a, n) => {
                if eval_arith(n, s)? == 0 {
                    None
                } else {
                    self.support(a, s, h)?
                }
            }
            Expectation::SepMul(a, b) => {
                let Some(left) = self.support(a, s, h)? else { return Ok(None) };
                let Some(right) = self.support(b, s, h)? else { return Ok(None) };
                let mut out = Vec::new();
                for x in &left {
                    for y in &right {
                        if x.disjoint(y) {
                            out.push(x.union(y)?);
                        }
                    }
                }
                Some(dedup(out))
            }
            Expectation::GuardedWand(..) => None,
            Expectation::SupVal(x, a) => {
                let mut acc = Vec::new();
                for v in self.bounds.value_range() {
                    match self.support(a, &s.bind(x, v), h)? {
                        Some(hs) => acc.extend(hs),
                        None => return Ok(None),
                    }
                }
                Some(dedup(acc))
            }
            Expectation::InfVal(x, a) => self.support(a, &s.bind(x, self.bounds.values.0), h)?,
            Expectation::Subst(a, x, by) => self.support(a, &s.bind(x, eval_arith(by, s)?), h)?,
            Expectation::BigSepMul(..) => match unfold_big_sep(e, s)? {
                Some(unfolded) => self.support(&unfolded, s, h)?,
                None => None,
            },
            Expectation::Scale(q, a) => {
                if q.is_zero() {
                    Some(Vec::new())
                } else {
                    self.support(a, s, h)?
                }
            }
        })
    }

    fn pred_support(&self, p: &Predicate, s: &Stack, h: &Heap) -> Result<Option<Vec<Heap>>> {
        Ok(match p {
            Predicate::Emp => Some(vec![Heap::empty()]),
            Predicate::PointsTo(e, vals) => {
                let base = eval_arith(e, s)?;
                let mut cells = Vec::with_capacity(vals.len());
                for (i, v) in vals.iter().enumerate() {
                    let loc = base + i as i64;
                    let val = eval_arith(v, s)?;
                    if h.get(loc) != Some(val) {
                        return Ok(Some(Vec::new()));
                    }
                    cells.push((loc, val));
                }
                Some(vec![Heap::from_cells(cells)])
            }
            Predicate::Allocated(e) => {
                let loc = eval_arith(e, s)?;
                Some(h.get(loc).map(|v| Heap::from_cells([(loc, v)])).into_iter().collect())
            }
            Predicate::EqExpr(..) | Predicate::StackGuard(_) => {
                if self.pred(p, s, h)? {
                    None
                } else {
                    Some(Vec::new())
                }
            }
            Predicate::And(a, b) => {
                intersect_supports(self.pred_support(a, s, h)?, || self.pred_support(b, s, h))?
            }
            Predicate::Or(a, b) => match (self.pred_support(a, s, h)?, self.pred_support(b, s, h)?) {
                (Some(x), Some(y)) => Some(union_heaps(x, y)),
                _ => None,
            },
            Predicate::Not(_) => None,
        })
    }

    /// A superset of the universe heaps on which a qualitative `g` is 1,
    /// when it can be read off the syntax.
    fn models(&self, g: &Expectation, s: &Stack) -> Result<Option<Vec<Heap>>> {
        Ok(match g {
            Expectation::Const(q) => q.is_zero().then(Vec::new),
            Expectation::Iverson(p) => self.pred_models(p, s)?,
            Expectation::Max(a, b) | Expectation::Add(a, b) => {
                match (self.models(a, s)?, self.models(b, s)?) {
                    (Some(x), Some(y)) => Some(union_heaps(x, y)),
                    _ => None,
                }
            }
            Expectation::Mul(a, b) | Expectation::Min(a, b) => match self.models(a, s)? {
                Some(x) => Some(x),
                None => self.models(b, s)?,
            },
            Expectation::SepMul(a, b) => {
                let Some(left) = self.models(a, s)? else { return Ok(None) };
                let Some(right) = self.models(b, s)? else { return Ok(None) };
                let mut out = Vec::new();
                for x in &left {
                    for y in &right {
                        if x.disjoint(y) {
                            out.push(x.union(y)?);
                        }
                    }
                }
                Some(dedup(out))
            }
            Expectation::Subst(a, x, by) => self.models(a, &s.bind(x, eval_arith(by, s)?))?,
            _ => None,
        })
    }

    fn pred_models(&self, p: &Predicate, s: &Stack) -> Result<Option<Vec<Heap>>> {
        Ok(match p {
            Predicate::Emp => Some(vec![Heap::empty()]),
            Predicate::PointsTo(e, vals) => {
                let base = eval_arith(e, s)?;
                let mut cells = Vec::with_capacity(vals.len());
                for (i, v) in vals.iter().enumerate() {
                    cells.push((base + i as i64, eval_arith(v, s)?));
                }
                let heap = Heap::from_cells(cells.iter().copied());
                // Overlapping cells (never for well-formed lists) collapse.
                Some(if heap.len() == vals.len() { vec![heap] } else { Vec::new() })
            }
            Predicate::Allocated(e) => {
                let loc = eval_arith(e, s)?;
                Some(self.bounds.value_range().map(|v| Heap::from_cells([(loc, v)])).collect())
            }
            Predicate::EqExpr(..) | Predicate::StackGuard(_) => {
                if self.pred(p, s, &Heap::empty())? {
                    None
                } else {
                    Some(Vec::new())
                }
            }
            Predicate::And(a, b) => match self.pred_models(a, s)? {
                Some(x) => Some(x),
                None => self.pred_models(b, s)?,
            },
            Predicate::Or(a, b) => match (self.pred_models(a, s)?, self.pred_models(b, s)?) {
                (Some(x), Some(y)) => Some(union_heaps(x, y)),
                _ => None,
            },
            Predicate::Not(_) => None,
        })
    }

    fn ensure_qualitative(&self, g: &Expectation) -> Result<()> {
        if syntactically_qualitative(g) {
            return Ok(());
        }
        if let Some(q) = self.qualitative.borrow().get(g) {
            return if *q { Ok(()) } else { Err(Error::NonQualitative(g.to_string())) };
        }
        let q = self.check_qualitative(g)?;
        self.qualitative.borrow_mut().insert(g.clone(), q);
        if q {
            Ok(())
        } else {
            Err(Error::NonQualitative(g.to_string()))
        }
    }

    fn check_qualitative(&self, e: &Expectation) -> Result<bool> {
        for s in enumerate_stacks(&e.free_vars(), self.bounds) {
            for h in self.universe() {
                let v = self.eval(e, &s, h)?;
                if !(v.is_zero() || v.is_one()) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Every (s, h) with s ranging over `vars` and h over the universe.
    pub fn states(&self, vars: &BTreeSet<crate::syntax::VarName>) -> Vec<ProgState> {
        let stacks = enumerate_stacks(vars, self.bounds);
        let mut out = Vec::with_capacity(stacks.len() * self.universe().len());
        for s in &stacks {
            for h in self.universe() {
                out.push(ProgState::new(s.clone(), h.clone()));
            }
        }
        out
    }
}

trait UnitRange {
    fn is_negative_or_above_one(&self) -> bool;
}

impl UnitRange for Rat {
    fn is_negative_or_above_one(&self) -> bool {
        *self < Rat::zero() || *self > Rat::one()
    }
}

fn indicator(b: bool) -> Rat {
    if b {
        Rat::one()
    } else {
        Rat::zero()
    }
}

fn dedup(mut hs: Vec<Heap>) -> Vec<Heap> {
    hs.sort();
    hs.dedup();
    hs
}

fn union_heaps(mut a: Vec<Heap>, b: Vec<Heap>) -> Vec<Heap> {
    a.extend(b);
    dedup(a)
}

fn intersect_supports(
    a: Option<Vec<Heap>>,
    b: impl FnOnce() -> Result<Option<Vec<Heap>>>,
) -> Result<Option<Vec<Heap>>> {
    match a {
        Some(x) if x.is_empty() => Ok(Some(x)),
        Some(x) => Ok(Some(match b()? {
            Some(y) => x.into_iter().filter(|h| y.contains(h)).collect(),
            None => x,
        })),
        None => b(),
    }
}

/// ⋆_{x∈[lo,hi]} E as E[x/lo] ⋆ (⋆_{x∈[lo+1,hi]} E); None on an empty range.
fn unfold_big_sep(e: &Expectation, s: &Stack) -> Result<Option<Expectation>> {
    let Expectation::BigSepMul(x, lo, hi, body) = e else { unreachable!() };
    let (lo, hi) = (eval_arith(lo, s)?, eval_arith(hi, s)?);
    if lo > hi {
        return Ok(None);
    }
    let head = Expectation::Subst(body.clone(), x.clone(), ArithExpr::Lit(lo));
    if lo == hi {
        return Ok(Some(head));
    }
    let tail = Expectation::BigSepMul(x.clone(), ArithExpr::Lit(lo + 1), ArithExpr::Lit(hi), body.clone());
    Ok(Some(Expectation::SepMul(Arc::new(head), Arc::new(tail))))
}

fn syntactically_qualitative(e: &Expectation) -> bool {
    match e {
        Expectation::Const(q) => q.is_zero() || q.is_one(),
        Expectation::Iverson(_) => true,
        Expectation::Mul(a, b)
        | Expectation::Max(a, b)
        | Expectation::Min(a, b)
        | Expectation::SepMul(a, b) => syntactically_qualitative(a) && syntactically_qualitative(b),
        Expectation::GuardedWand(_, b) => syntactically_qualitative(b),
        Expectation::Pow(a, _)
        | Expectation::SupVal(_, a)
        | Expectation::InfVal(_, a)
        | Expectation::Subst(a, _, _)
        | Expectation::BigSepMul(_, _, _, a) => syntactically_qualitative(a),
        Expectation::Add(..) | Expectation::Scale(..) => false,
    }
}

pub fn eval(e: &Expectation, st: &ProgState, bounds: &DomainBounds) -> Result<Rat> {
    Evaluator::new(bounds).eval_state(e, st)
}

pub fn is_qualitative(e: &Expectation, bounds: &DomainBounds) -> Result<bool> {
    Evaluator::new(bounds).check_qualitative(e)
}

/// At most one subheap of each enumerated heap gives `e` a positive value.
pub fn is_precise(e: &Expectation, bounds: &DomainBounds) -> Result<bool> {
    let ev = Evaluator::new(bounds);
    for s in enumerate_stacks(&e.free_vars(), bounds) {
        for h in ev.universe() {
            let mut positive = 0;
            for (sub, _) in h.splits() {
                if !ev.eval(e, &s, &sub)?.is_zero() {
                    positive += 1;
                    if positive > 1 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// A state at which an entailment fails, with both sides' values there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub state: ProgState,
    pub lhs: Rat,
    pub rhs: Rat,
}

pub fn entailment_witness(x: &Expectation, y: &Expectation, bounds: &DomainBounds) -> Result<Option<Witness>> {
    let ev = Evaluator::new(bounds);
    let mut vars = x.free_vars();
    vars.extend(y.free_vars());
    for s in enumerate_stacks(&vars, bounds) {
        for h in ev.universe() {
            let lhs = ev.eval(x, &s, h)?;
            if lhs.is_zero() {
                continue;
            }
            let rhs = ev.eval(y, &s, h)?;
            if lhs > rhs {
                return Ok(Some(Witness { state: ProgState::new(s, h.clone()), lhs, rhs }));
            }
        }
    }
    Ok(None)
}

pub fn entails(x: &Expectation, y: &Expectation, bounds: &DomainBounds) -> Result<bool> {
    Ok(entailment_witness(x, y, bounds)?.is_none())
}
