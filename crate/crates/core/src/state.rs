//! Stacks, heaps and the bounded universe every quantifier ranges over.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::syntax::{ArithExpr, Guard, ProbExpr, VarName};
use crate::{rat_int, Rat};

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stack(BTreeMap<VarName, i64>);

impl Stack {
    /// All `vars` set to 0.
    pub fn zeroed<'a>(vars: impl IntoIterator<Item = &'a VarName>) -> Self {
        Stack(vars.into_iter().map(|x| (x.clone(), 0)).collect())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, i64)>) -> Self {
        Stack(pairs.into_iter().map(|(x, v)| (VarName::from(x), v)).collect())
    }

    pub fn get(&self, x: &VarName) -> Result<i64> {
        self.0.get(x).copied().ok_or_else(|| Error::Undeclared(x.clone()))
    }

    pub fn is_declared(&self, x: &VarName) -> bool {
        self.0.contains_key(x)
    }

    /// s[x/v]; `x` must already be declared.
    pub fn subst(&self, x: &VarName, v: i64) -> Result<Stack> {
        if !self.is_declared(x) {
            return Err(Error::Undeclared(x.clone()));
        }
        Ok(self.bind(x, v))
    }

    /// s[x/v] that also declares `x`; used for quantifier-bound variables.
    pub fn bind(&self, x: &VarName, v: i64) -> Stack {
        let mut s = self.clone();
        s.0.insert(x.clone(), v);
        s
    }

    pub fn set(&mut self, x: &VarName, v: i64) {
        self.0.insert(x.clone(), v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, i64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarName> {
        self.0.keys()
    }
}

impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Heap(BTreeMap<i64, i64>);

impl Heap {
    pub fn empty() -> Self {
        Heap::default()
    }

    pub fn from_cells(cells: impl IntoIterator<Item = (i64, i64)>) -> Self {
        Heap(cells.into_iter().collect())
    }

    pub fn get(&self, loc: i64) -> Option<i64> {
        self.0.get(&loc).copied()
    }

    pub fn contains(&self, loc: i64) -> bool {
        self.0.contains_key(&loc)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dom(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.keys().copied()
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn with(&self, loc: i64, val: i64) -> Heap {
        let mut h = self.clone();
        h.0.insert(loc, val);
        h
    }

    pub fn without(&self, loc: i64) -> Heap {
        let mut h = self.clone();
        h.0.remove(&loc);
        h
    }

    pub fn disjoint(&self, other: &Heap) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.keys().all(|k| !large.0.contains_key(k))
    }

    pub fn union(&self, other: &Heap) -> Result<Heap> {
        let mut h = self.clone();
        for (k, v) in other.cells() {
            if h.0.insert(k, v).is_some() {
                return Err(Error::Overlap(k));
            }
        }
        Ok(h)
    }

    /// Whether `self` is a subheap of `other`.
    pub fn is_subheap_of(&self, other: &Heap) -> bool {
        self.cells().all(|(k, v)| other.get(k) == Some(v))
    }

    /// other \ self, assuming self ⊆ other.
    pub fn remainder_in(&self, other: &Heap) -> Heap {
        Heap(other.0.iter().filter(|(k, _)| !self.0.contains_key(k)).map(|(k, v)| (*k, *v)).collect())
    }

    /// Every split h = h1 ⋆ h2, as (h1, h2) pairs; 2^|dom h| of them.
    pub fn splits(&self) -> Vec<(Heap, Heap)> {
        let cells: Vec<(i64, i64)> = self.cells().collect();
        let n = cells.len();
        assert!(n < 32, "heap too large to split exhaustively");
        (0u32..(1 << n))
            .map(|mask| {
                let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
                for (i, (k, v)) in cells.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        a.insert(*k, *v);
                    } else {
                        b.insert(*k, *v);
                    }
                }
                (Heap(a), Heap(b))
            })
            .collect()
    }
}

impl fmt::Display for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}->{v}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn heap_disjoint(h1: &Heap, h2: &Heap) -> bool {
    h1.disjoint(h2)
}

pub fn heap_union(h1: &Heap, h2: &Heap) -> Result<Heap> {
    h1.union(h2)
}

pub fn stack_subst(s: &Stack, x: &VarName, v: i64) -> Result<Stack> {
    s.subst(x, v)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProgState {
    pub stack: Stack,
    pub heap: Heap,
}

impl ProgState {
    pub fn new(stack: Stack, heap: Heap) -> Self {
        ProgState { stack, heap }
    }
}

impl fmt::Display for ProgState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.stack, self.heap)
    }
}

pub fn eval_arith(e: &ArithExpr, s: &Stack) -> Result<i64> {
    Ok(match e {
        ArithExpr::Lit(n) => *n,
        ArithExpr::Var(x) => s.get(x)?,
        ArithExpr::Add(a, b) => eval_arith(a, s)?.wrapping_add(eval_arith(b, s)?),
        ArithExpr::Sub(a, b) => eval_arith(a, s)?.wrapping_sub(eval_arith(b, s)?),
        ArithExpr::Mul(a, b) => eval_arith(a, s)?.wrapping_mul(eval_arith(b, s)?),
    })
}

pub fn eval_guard(g: &Guard, s: &Stack) -> Result<bool> {
    Ok(match g {
        Guard::True => true,
        Guard::False => false,
        Guard::Cmp(op, a, b) => op.holds(eval_arith(a, s)?, eval_arith(b, s)?),
        Guard::And(a, b) => eval_guard(a, s)? && eval_guard(b, s)?,
        Guard::Or(a, b) => eval_guard(a, s)? || eval_guard(b, s)?,
        Guard::Not(a) => !eval_guard(a, s)?,
    })
}

pub fn eval_prob(p: &ProbExpr, s: &Stack) -> Result<Rat> {
    match p {
        ProbExpr::Lit(q) => {
            if *q < rat_int(0) || *q > rat_int(1) {
                return Err(Error::OutOfRange { what: "probability".into(), value: q.clone() });
            }
            Ok(q.clone())
        }
        ProbExpr::Cond(g, a, b) => {
            if eval_guard(g, s)? {
                eval_prob(a, s)
            } else {
                eval_prob(b, s)
            }
        }
    }
}

/// The finite universe: declared variables, a value interval, a location
/// set and a cap on heap size for enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainBounds {
    pub vars: BTreeSet<VarName>,
    pub values: (i64, i64),
    pub locations: BTreeSet<i64>,
    pub heap_cap: usize,
}

impl DomainBounds {
    pub fn new(
        vars: impl IntoIterator<Item = VarName>,
        values: (i64, i64),
        locations: impl IntoIterator<Item = i64>,
        heap_cap: usize,
    ) -> Result<Self> {
        let b = DomainBounds {
            vars: vars.into_iter().collect(),
            values,
            locations: locations.into_iter().collect(),
            heap_cap,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.0 > self.values.1 {
            return Err(Error::Bounds(format!("empty value range {}..{}", self.values.0, self.values.1)));
        }
        if self.heap_cap > self.locations.len() {
            return Err(Error::Bounds(format!(
                "heap cap {} exceeds the {} locations",
                self.heap_cap,
                self.locations.len()
            )));
        }
        Ok(())
    }

    pub fn with_vars(&self, vars: impl IntoIterator<Item = VarName>) -> Self {
        let mut b = self.clone();
        b.vars.extend(vars);
        b
    }

    pub fn value_range(&self) -> impl Iterator<Item = i64> + Clone {
        self.values.0..=self.values.1
    }

    pub fn num_values(&self) -> usize {
        (self.values.1 - self.values.0 + 1) as usize
    }

    pub fn contains_heap(&self, h: &Heap) -> bool {
        h.len() <= self.heap_cap
            && h.cells().all(|(l, v)| {
                self.locations.contains(&l) && (self.values.0..=self.values.1).contains(&v)
            })
    }

    pub fn zero_stack(&self) -> Stack {
        Stack::zeroed(&self.vars)
    }
}

/// All heaps over the bounds, ordered by size, then locations, then values.
pub fn enumerate_heaps(bounds: &DomainBounds) -> Vec<Heap> {
    let locs: Vec<i64> = bounds.locations.iter().copied().collect();
    let mut out = Vec::new();
    for size in 0..=bounds.heap_cap {
        for dom in combinations(&locs, size) {
            extend_values(&dom, 0, &mut Vec::new(), bounds, &mut out);
        }
    }
    out
}

fn combinations(items: &[i64], k: usize) -> Vec<Vec<i64>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out: Vec<Vec<i64>> = combinations(&items[1..], k - 1)
        .into_iter()
        .map(|mut rest| {
            rest.insert(0, items[0]);
            rest
        })
        .collect();
    out.extend(combinations(&items[1..], k));
    out
}

fn extend_values(
    dom: &[i64],
    i: usize,
    acc: &mut Vec<i64>,
    bounds: &DomainBounds,
    out: &mut Vec<Heap>,
) {
    if i == dom.len() {
        out.push(Heap::from_cells(dom.iter().copied().zip(acc.iter().copied())));
        return;
    }
    for v in bounds.value_range() {
        acc.push(v);
        extend_values(dom, i + 1, acc, bounds, out);
        acc.pop();
    }
}

/// Every assignment of bounds.values to `vars`; other declared variables are 0.
pub fn enumerate_stacks<'a>(
    vars: impl IntoIterator<Item = &'a VarName>,
    bounds: &DomainBounds,
) -> Vec<Stack> {
    let vars: Vec<&VarName> = vars.into_iter().collect();
    let base = Stack::zeroed(bounds.vars.iter().chain(vars.iter().copied()));
    let mut out = vec![base];
    for x in vars {
        out = out
            .into_iter()
            .flat_map(|s| bounds.value_range().map(move |v| s.bind(x, v)))
            .collect();
    }
    out
}

/// Parses the initial-state format: `var = int` and `heap loc = int` lines.
pub fn parse_initial_state(text: &str) -> Result<ProgState> {
    let mut st = ProgState::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Syntax { line: n + 1, col: 1, msg: format!("expected `var = int` or `heap loc = int`: `{line}`") };
        let (lhs, rhs) = line.split_once('=').ok_or_else(bad)?;
        let value: i64 = rhs.trim().parse().map_err(|_| bad())?;
        let lhs = lhs.trim();
        if let Some(loc) = lhs.strip_prefix("heap ") {
            let loc: i64 = loc.trim().parse().map_err(|_| bad())?;
            if st.heap.contains(loc) {
                return Err(Error::Overlap(loc));
            }
            st.heap = st.heap.with(loc, value);
        } else {
            let x = VarName::new(lhs).map_err(|_| bad())?;
            st.stack.set(&x, value);
        }
    }
    Ok(st)
}

pub fn format_initial_state(st: &ProgState) -> String {
    let mut out = String::new();
    for (x, v) in st.stack.iter() {
        out.push_str(&format!("{x} = {v}\n"));
    }
    for (l, v) in st.heap.cells() {
        out.push_str(&format!("heap {l} = {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn bounds(values: (i64, i64), locs: &[i64], cap: usize) -> DomainBounds {
        DomainBounds::new([], values, locs.iter().copied(), cap).unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn disjointness_and_union() {
        let a = Heap::from_cells([(1, 0)]);
        assert!(heap_disjoint(&a, &Heap::from_cells([(2, 0)])));
        assert!(!heap_disjoint(&a, &Heap::from_cells([(1, 5)])));
        assert!(heap_disjoint(&Heap::empty(), &a));
        let u = heap_union(&Heap::from_cells([(1, 7)]), &Heap::from_cells([(2, 8)])).unwrap();
        assert_eq!(u, Heap::from_cells([(1, 7), (2, 8)]));
        assert_eq!(heap_union(&Heap::empty(), &Heap::from_cells([(1, 7)])).unwrap(), Heap::from_cells([(1, 7)]));
        assert_eq!(heap_union(&Heap::from_cells([(1, 7)]), &Heap::from_cells([(1, 8)])), Err(Error::Overlap(1)));
    }

    #[test]
    fn stack_substitution() {
        let s = Stack::from_pairs([("y", 0), ("x", 3)]);
        assert_eq!(stack_subst(&s, &"y".into(), -1).unwrap().get(&"y".into()).unwrap(), -1);
        assert_eq!(stack_subst(&s, &"x".into(), 5).unwrap().get(&"x".into()).unwrap(), 5);
        assert_eq!(stack_subst(&s, &"x".into(), 3).unwrap(), s);
        assert!(stack_subst(&s, &"q".into(), 1).is_err());
    }

    #[test]
    fn expression_evaluation() {
        let s = Stack::from_pairs([("z1", 10), ("y1", 2), ("x", 3), ("y", -1)]);
        let e = ArithExpr::add(ArithExpr::var("z1"), ArithExpr::var("y1"));
        assert_eq!(eval_arith(&e, &s).unwrap(), 12);
        assert_eq!(eval_arith(&ArithExpr::Lit(-1), &s).unwrap(), -1);
        assert_eq!(eval_arith(&ArithExpr::var("x"), &s).unwrap(), 3);
        assert!(eval_arith(&ArithExpr::var("nope"), &s).is_err());
        let g = Guard::cmp(crate::CmpOp::Eq, ArithExpr::var("y"), -1);
        assert!(eval_guard(&g, &s).unwrap());
        assert_eq!(eval_prob(&ProbExpr::Lit(rat(1, 2)), &s).unwrap(), rat(1, 2));
        assert_eq!(eval_prob(&ProbExpr::Lit(rat(1, 3)), &s).unwrap(), rat(1, 3));
        assert!(eval_prob(&ProbExpr::Lit(rat(4, 3)), &s).is_err());
    }

    #[test]
    fn heap_enumeration_counts() {
        assert_eq!(
            enumerate_heaps(&bounds((0, 1), &[1], 1)),
            vec![Heap::empty(), Heap::from_cells([(1, 0)]), Heap::from_cells([(1, 1)])]
        );
        assert_eq!(enumerate_heaps(&bounds((0, 1), &[1, 2], 0)), vec![Heap::empty()]);
        assert_eq!(enumerate_heaps(&bounds((0, 0), &[1, 2], 2)).len(), 4);
        for (vals, locs, cap) in [((-1, 1), 3usize, 2usize), ((0, 2), 4, 4), ((0, 0), 3, 1)] {
            let b = bounds(vals, &(0..locs as i64).collect::<Vec<_>>(), cap);
            let nv = b.num_values();
            let expected: usize = (0..=cap).map(|k| binom(locs, k) * nv.pow(k as u32)).sum();
            let hs = enumerate_heaps(&b);
            assert_eq!(hs.len(), expected);
            let unique: BTreeSet<&Heap> = hs.iter().collect();
            assert_eq!(unique.len(), hs.len());
        }
    }

    #[test]
    fn stack_enumeration_counts() {
        let b = bounds((-1, 1), &[], 0);
        assert_eq!(enumerate_stacks([&"y".into()], &b).len(), 3);
        assert_eq!(enumerate_stacks([], &b).len(), 1);
        let b01 = bounds((0, 1), &[], 0);
        let st = enumerate_stacks([&"a".into(), &"b".into()], &b01);
        assert_eq!(st.len(), 4);
        assert_eq!(st.iter().collect::<BTreeSet<_>>().len(), 4);
    }

    #[test]
    fn union_laws_over_small_heaps() {
        let hs = enumerate_heaps(&bounds((0, 1), &[1, 2], 2));
        for a in &hs {
            assert_eq!(a.union(&Heap::empty()).unwrap(), *a);
            for b in &hs {
                if a.disjoint(b) {
                    assert_eq!(a.union(b).unwrap(), b.union(a).unwrap());
                }
                for c in &hs {
                    if a.disjoint(b) && b.disjoint(c) && a.disjoint(c) {
                        let l = a.union(b).unwrap().union(c).unwrap();
                        let r = a.union(&b.union(c).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn splits_reunite() {
        for h in enumerate_heaps(&bounds((0, 1), &[1, 2, 3], 3)) {
            let splits = h.splits();
            assert_eq!(splits.len(), 1 << h.len());
            for (a, b) in splits {
                assert!(a.disjoint(&b));
                assert_eq!(a.union(&b).unwrap(), h);
            }
        }
    }

    #[test]
    fn initial_state_format_round_trips() {
        let st = parse_initial_state("r = 1\ny = 0 # comment\nheap 1 = -1\n").unwrap();
        assert_eq!(st.heap, Heap::from_cells([(1, -1)]));
        assert_eq!(st.stack.get(&"r".into()).unwrap(), 1);
        assert_eq!(parse_initial_state(&format_initial_state(&st)).unwrap(), st);
        assert!(parse_initial_state("heap x = 1").is_err());
    }
}
