//! Checker for lower-bound derivations `I ⊨ {X} C {Y}`. Every inequality a
//! rule demands is decided by enumerating the bounded domain with exact
//! rationals; static side conditions are decided syntactically.
//!
//! Matching between a node and its premises is up to entailment: a premise
//! may prove a larger preexpectation or a smaller postexpectation than the
//! rule instance needs, which amounts to an implicit application of the
//! monotonic rule with the same invariant.

mod json;
mod prodcons;

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num::{One, Zero};

use crate::analysis::check_ast;
use crate::error::Error;
use crate::expectation::{fresh_var, Evaluator, Expectation, Witness};
use crate::semantics::Limits;
use crate::state::{enumerate_stacks, eval_prob, DomainBounds, ProgState};
use crate::syntax::{free_vars_cmd, is_tame, is_terminating_atom, written_vars, ArithExpr, Command, ProbExpr, VarName};
use crate::Rat;

pub use json::{load_proof, parse_proof, proof_to_json, save_proof};
pub use prodcons::{
    channel_invariant, check_producer_consumer, consumer_invariant, producer_consumer_bounds,
    producer_consumer_program, producer_consumer_proof, producer_invariant, resource_invariant, transfer_mass,
    ProdConsCertificate,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Term,
    Assign,
    Look,
    Alloc,
    Mut,
    Disp,
    Seq,
    If,
    While,
    Div,
    PChoice,
    Atomic,
    Share,
    Concur,
    Superlin,
    WlpWrlp,
    Frame,
    Atom,
    Monotonic,
    Max,
    Min,
    Convex,
}

impl Rule {
    pub const ALL: [Rule; 22] = [
        Rule::Term,
        Rule::Assign,
        Rule::Look,
        Rule::Alloc,
        Rule::Mut,
        Rule::Disp,
        Rule::Seq,
        Rule::If,
        Rule::While,
        Rule::Div,
        Rule::PChoice,
        Rule::Atomic,
        Rule::Share,
        Rule::Concur,
        Rule::Superlin,
        Rule::WlpWrlp,
        Rule::Frame,
        Rule::Atom,
        Rule::Monotonic,
        Rule::Max,
        Rule::Min,
        Rule::Convex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Term => "term",
            Rule::Assign => "assign",
            Rule::Look => "look",
            Rule::Alloc => "alloc",
            Rule::Mut => "mut",
            Rule::Disp => "disp",
            Rule::Seq => "seq",
            Rule::If => "if",
            Rule::While => "while",
            Rule::Div => "div",
            Rule::PChoice => "p-choice",
            Rule::Atomic => "atomic",
            Rule::Share => "share",
            Rule::Concur => "concur",
            Rule::Superlin => "superlin",
            Rule::WlpWrlp => "wlp-wrlp",
            Rule::Frame => "frame",
            Rule::Atom => "atom",
            Rule::Monotonic => "monotonic",
            Rule::Max => "max",
            Rule::Min => "min",
            Rule::Convex => "convex",
        }
    }

    /// Number of judgement premises; side conditions are not counted.
    pub fn arity(self) -> usize {
        match self {
            Rule::Term | Rule::Assign | Rule::Look | Rule::Alloc | Rule::Mut | Rule::Disp | Rule::Div => 0,
            Rule::Atomic | Rule::Share | Rule::WlpWrlp | Rule::Frame | Rule::Atom | Rule::Monotonic | Rule::While => 1,
            Rule::Seq
            | Rule::If
            | Rule::PChoice
            | Rule::Concur
            | Rule::Superlin
            | Rule::Max
            | Rule::Min
            | Rule::Convex => 2,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown proof rule `{s}`")))
    }
}

/// `I ⊨ {pre} cmd {post}`, or the plain statement `pre ≤ wlp(cmd, post)`
/// when there is no invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgement {
    pub pre: Expectation,
    pub cmd: Command,
    pub post: Expectation,
    pub invariant: Option<Expectation>,
}

impl Judgement {
    pub fn new(pre: Expectation, cmd: Command, post: Expectation, invariant: Expectation) -> Self {
        Judgement { pre, cmd, post, invariant: Some(invariant) }
    }

    pub fn wlp(pre: Expectation, cmd: Command, post: Expectation) -> Self {
        Judgement { pre, cmd, post, invariant: None }
    }
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.invariant {
            Some(i) => write!(f, "{i} |= {{{}}} {} {{{}}}", self.pre, self.cmd, self.post),
            None => write!(f, "{} <= wlp({}, {})", self.pre, self.cmd, self.post),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AstMode {
    #[default]
    Verify,
    Assert,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Payload {
    /// Intermediate expectation of `seq`.
    pub mid: Option<Expectation>,
    /// Loop invariant of `while`.
    pub loop_invariant: Option<Expectation>,
    /// Shared part moved into the invariant by `share`.
    pub pi: Option<Expectation>,
    pub frame: Option<Expectation>,
    /// Scalar of `superlin`.
    pub scalar: Option<Rat>,
    pub ast: AstMode,
    /// Weight of `convex`.
    pub weight: Option<ProbExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    pub rule: Rule,
    pub payload: Payload,
    pub premises: Vec<ProofNode>,
    pub conclusion: Judgement,
}

impl ProofNode {
    pub fn new(rule: Rule, conclusion: Judgement, premises: Vec<ProofNode>) -> Self {
        ProofNode { rule, payload: Payload::default(), premises, conclusion }
    }

    pub fn with_payload(mut self, payload: Payload) -> Self {
        self.payload = payload;
        self
    }

    /// Nodes in pre-order, each with its path from the root.
    pub fn walk(&self) -> Vec<(Vec<usize>, &ProofNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((path, node)) = stack.pop() {
            for (i, p) in node.premises.iter().enumerate().rev() {
                let mut sub = path.clone();
                sub.push(i);
                stack.push((sub, p));
            }
            out.push((path, node));
        }
        out
    }
}

/// Position of a node: the premise indices from the root, and its rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub path: Vec<usize>,
    pub rule: Rule,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.path {
            write!(f, ".{i}")?;
        }
        write!(f, " ({})", self.rule)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discharged {
    pub location: Location,
    pub condition: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AstStatus {
    Verified,
    Asserted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub conclusion: Judgement,
    /// Every condition that was checked, in pre-order of the tree.
    pub discharged: Vec<Discharged>,
    pub ast: Vec<(Location, AstStatus)>,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "certified: {}", self.conclusion)?;
        for d in &self.discharged {
            writeln!(f, "  {}: {}", d.location, d.condition)?;
        }
        for (loc, status) in &self.ast {
            let s = match status {
                AstStatus::Verified => "VERIFIED",
                AstStatus::Asserted => "ASSERTED",
            };
            writeln!(f, "  {loc}: AST {s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("{location}: {condition} fails at {}: {} > {}", witness.state, witness.lhs, witness.rhs)]
    EntailmentFails { location: Location, condition: String, witness: Witness, lhs: Expectation, rhs: Expectation },
    #[error("{location}: side condition {condition} fails: {witness}")]
    SideConditionFails { location: Location, condition: String, witness: String },
    #[error("{location}: resource invariant is not qualitative")]
    NonQualitativeInvariant { location: Location },
    #[error("{location}: resource invariant is not precise")]
    NonPreciseInvariant { location: Location },
    #[error("{location}: atomic body is not tame")]
    NotTame { location: Location },
    #[error("{location}: command is not a terminating atom")]
    NotTerminatingAtom { location: Location },
    #[error("{location}: almost-sure termination could not be verified ({reason})")]
    AstUnverified { location: Location, reason: String },
    #[error("{location}: expected {expected} premises, found {found}")]
    Arity { location: Location, expected: usize, found: usize },
    #[error("{location}: {msg}")]
    Shape { location: Location, msg: String },
    #[error("{location}: {source}")]
    Eval { location: Location, source: Error },
}

impl CheckError {
    pub fn location(&self) -> &Location {
        match self {
            CheckError::EntailmentFails { location, .. }
            | CheckError::SideConditionFails { location, .. }
            | CheckError::NonQualitativeInvariant { location }
            | CheckError::NonPreciseInvariant { location }
            | CheckError::NotTame { location }
            | CheckError::NotTerminatingAtom { location }
            | CheckError::AstUnverified { location, .. }
            | CheckError::Arity { location, .. }
            | CheckError::Shape { location, .. }
            | CheckError::Eval { location, .. } => location,
        }
    }
}

/// Checks a derivation; on success the certificate lists what was discharged.
pub fn check(node: &ProofNode, bounds: &DomainBounds) -> Result<Certificate, CheckError> {
    let checker = Checker::new(bounds);
    let mut cert = Certificate { conclusion: node.conclusion.clone(), discharged: Vec::new(), ast: Vec::new() };
    for (path, n) in node.walk() {
        checker.node(n, Location { path, rule: n.rule }, &mut cert)?;
    }
    Ok(cert)
}

/// Nonnegative combination Σ cᵢ·Eᵢ, evaluated without clamping.
#[derive(Clone, Debug, PartialEq)]
struct Lin(Vec<(Rat, Expectation)>);

impl Lin {
    fn one(e: &Expectation) -> Lin {
        Lin(vec![(Rat::one(), e.clone())])
    }

    fn sum(terms: impl IntoIterator<Item = Expectation>) -> Lin {
        Lin(terms.into_iter().map(|e| (Rat::one(), e)).collect())
    }

    fn free_vars(&self) -> BTreeSet<VarName> {
        self.0.iter().flat_map(|(_, e)| e.free_vars()).collect()
    }

    fn as_single(&self) -> Option<&Expectation> {
        match self.0.as_slice() {
            [(c, e)] if c.is_one() => Some(e),
            _ => None,
        }
    }

    fn display(&self) -> Expectation {
        let parts = self.0.iter().map(|(c, e)| if c.is_one() { e.clone() } else { Expectation::scale(c.clone(), e.clone()) });
        Expectation::sum_all(parts)
    }
}

struct Checker<'a> {
    bounds: &'a DomainBounds,
    ev: Evaluator<'a>,
    qualitative: RefCell<HashMap<Expectation, bool>>,
    precise: RefCell<HashMap<Expectation, bool>>,
}

impl<'a> Checker<'a> {
    fn new(bounds: &'a DomainBounds) -> Self {
        Checker { bounds, ev: Evaluator::new(bounds), qualitative: RefCell::default(), precise: RefCell::default() }
    }

    fn eval_err(loc: &Location) -> impl Fn(Error) -> CheckError + '_ {
        move |source| CheckError::Eval { location: loc.clone(), source }
    }

    fn shape(loc: &Location, msg: impl Into<String>) -> CheckError {
        CheckError::Shape { location: loc.clone(), msg: msg.into() }
    }

    fn value(&self, lin: &Lin, st: &ProgState) -> crate::error::Result<Rat> {
        let mut total = Rat::zero();
        for (c, e) in &lin.0 {
            if c.is_zero() {
                continue;
            }
            total += c * self.ev.eval_state(e, st)?;
        }
        Ok(total)
    }

    /// `lhs ≤ rhs` at every state of the bounded domain.
    fn le(&self, loc: &Location, cond: &str, lhs: &Lin, rhs: &Lin, cert: &mut Certificate) -> Result<(), CheckError> {
        cert.discharged.push(Discharged { location: loc.clone(), condition: cond.to_string() });
        if lhs == rhs {
            return Ok(());
        }
        if let (Some(a), Some(b)) = (lhs.as_single(), rhs.as_single()) {
            if a == b || *b == Expectation::one() || *a == Expectation::zero() {
                return Ok(());
            }
        }
        let mut vars = lhs.free_vars();
        vars.extend(rhs.free_vars());
        let err = Self::eval_err(loc);
        for s in enumerate_stacks(&vars, self.bounds) {
            for h in self.ev.universe() {
                let st = ProgState::new(s.clone(), h.clone());
                let a = self.value(lhs, &st).map_err(&err)?;
                if a.is_zero() {
                    continue;
                }
                let b = self.value(rhs, &st).map_err(&err)?;
                if a > b {
                    return Err(CheckError::EntailmentFails {
                        location: loc.clone(),
                        condition: cond.to_string(),
                        witness: Witness { state: st, lhs: a, rhs: b },
                        lhs: lhs.display(),
                        rhs: rhs.display(),
                    });
                }
            }
        }
        Ok(())
    }

    fn le1(&self, loc: &Location, cond: &str, lhs: &Expectation, rhs: &Expectation, cert: &mut Certificate) -> Result<(), CheckError> {
        self.le(loc, cond, &Lin::one(lhs), &Lin::one(rhs), cert)
    }

    fn is_qualitative(&self, loc: &Location, e: &Expectation) -> Result<bool, CheckError> {
        if let Some(b) = self.qualitative.borrow().get(e) {
            return Ok(*b);
        }
        let b = crate::expectation::is_qualitative(e, self.bounds).map_err(Self::eval_err(loc))?;
        self.qualitative.borrow_mut().insert(e.clone(), b);
        Ok(b)
    }

    fn require_precise(&self, loc: &Location, e: &Expectation, cert: &mut Certificate) -> Result<(), CheckError> {
        let cached = self.precise.borrow().get(e).copied();
        let b = match cached {
            Some(b) => b,
            None => {
                let b = crate::expectation::is_precise(e, self.bounds).map_err(Self::eval_err(loc))?;
                self.precise.borrow_mut().insert(e.clone(), b);
                b
            }
        };
        if !b {
            return Err(CheckError::NonPreciseInvariant { location: loc.clone() });
        }
        cert.discharged.push(Discharged { location: loc.clone(), condition: format!("{e} precise") });
        Ok(())
    }

    /// Two invariants denote the same expectation.
    fn same_invariant(
        &self,
        loc: &Location,
        have: &Expectation,
        want: &Expectation,
        cert: &mut Certificate,
    ) -> Result<(), CheckError> {
        if have == want {
            return Ok(());
        }
        self.le1(loc, "premise invariant entails the required one", have, want, cert)?;
        self.le1(loc, "required invariant entails the premise one", want, have, cert)
    }

    fn invariant<'j>(&self, loc: &Location, j: &'j Judgement, whose: &str) -> Result<&'j Expectation, CheckError> {
        j.invariant
            .as_ref()
            .ok_or_else(|| Self::shape(loc, format!("{whose} must be a resource-invariant judgement")))
    }

    fn same_cmd(loc: &Location, have: &Command, want: &Command, whose: &str) -> Result<(), CheckError> {
        if have != want {
            return Err(Self::shape(loc, format!("{whose} is about `{have}`, expected `{want}`")));
        }
        Ok(())
    }

    fn disjoint_writes(
        loc: &Location,
        written: &BTreeSet<VarName>,
        read: &BTreeSet<VarName>,
        cond: String,
        cert: &mut Certificate,
    ) -> Result<(), CheckError> {
        if let Some(x) = written.intersection(read).next() {
            return Err(CheckError::SideConditionFails { location: loc.clone(), condition: cond, witness: x.to_string() });
        }
        cert.discharged.push(Discharged { location: loc.clone(), condition: cond });
        Ok(())
    }

    fn node(&self, n: &ProofNode, loc: Location, cert: &mut Certificate) -> Result<(), CheckError> {
        let rule = n.rule;
        if n.premises.len() != rule.arity() {
            return Err(CheckError::Arity { location: loc, expected: rule.arity(), found: n.premises.len() });
        }
        let c = &n.conclusion;
        if let Some(i) = &c.invariant {
            if !self.is_qualitative(&loc, i)? {
                return Err(CheckError::NonQualitativeInvariant { location: loc });
            }
        }
        let ps: Vec<&Judgement> = n.premises.iter().map(|p| &p.conclusion).collect();
        let (x, y) = (&c.pre, &c.post);
        let emp = Expectation::emp();
        let sep = |a: &Expectation, b: &Expectation| Expectation::sep(a.clone(), b.clone());

        // Rules whose premises share the conclusion's command and invariant.
        if matches!(rule, Rule::Monotonic | Rule::Max | Rule::Min | Rule::Convex | Rule::Frame) {
            for (k, p) in ps.iter().enumerate() {
                Self::same_cmd(&loc, &p.cmd, &c.cmd, &format!("premise {k}"))?;
                match (&p.invariant, &c.invariant) {
                    (Some(a), Some(b)) => self.same_invariant(&loc, a, b, cert)?,
                    (None, None) if rule == Rule::Monotonic => {}
                    _ => return Err(Self::shape(&loc, format!("premise {k} and conclusion differ in kind"))),
                }
            }
        }

        match rule {
            Rule::Term => {
                self.invariant(&loc, c, "conclusion")?;
                Self::expect(&loc, matches!(c.cmd, Command::Terminated), "term applies to `skip`")?;
                self.le1(&loc, "pre <= post", x, y, cert)?;
            }
            Rule::Assign => {
                self.invariant(&loc, c, "conclusion")?;
                let Command::Assign(v, e) = &c.cmd else { return Err(Self::shape(&loc, "assign applies to `x := e`")) };
                self.le1(&loc, "pre <= post[x/e]", x, &y.clone().subst(v, e.clone()), cert)?;
            }
            Rule::Look => {
                self.invariant(&loc, c, "conclusion")?;
                let Command::Lookup(v, e) = &c.cmd else { return Err(Self::shape(&loc, "look applies to `x := <e>`")) };
                let mut avoid = BTreeSet::new();
                y.all_names(&mut avoid);
                e.vars(&mut avoid);
                avoid.insert(v.clone());
                let fresh = fresh_var("v", &avoid);
                let cell = Expectation::pts(e.clone(), ArithExpr::Var(fresh.clone()));
                let body = sep(&cell, &Expectation::wand(cell.clone(), y.clone().subst(v, ArithExpr::Var(fresh.clone()))));
                self.le1(&loc, "pre <= sup v. e |-> v ** (e |-> v -** post[x/v])", x, &Expectation::sup(&fresh, body), cert)?;
            }
            Rule::Alloc => {
                self.invariant(&loc, c, "conclusion")?;
                let Command::Alloc(v, es) = &c.cmd else { return Err(Self::shape(&loc, "alloc applies to `x := new(...)`")) };
                let mut avoid = BTreeSet::new();
                y.all_names(&mut avoid);
                for e in es {
                    e.vars(&mut avoid);
                }
                avoid.insert(v.clone());
                let fresh = fresh_var("v", &avoid);
                let block = Expectation::points_to(ArithExpr::Var(fresh.clone()), es.clone());
                let body = Expectation::wand(block, y.clone().subst(v, ArithExpr::Var(fresh.clone())));
                self.le1(&loc, "pre <= inf v. (v |-> es -** post[x/v])", x, &Expectation::inf(&fresh, body), cert)?;
            }
            Rule::Mut => {
                self.invariant(&loc, c, "conclusion")?;
                let Command::Mutate(e, e2) = &c.cmd else { return Err(Self::shape(&loc, "mut applies to `<e> := e'`")) };
                let rhs = sep(&Expectation::allocated(e.clone()), &Expectation::wand(Expectation::pts(e.clone(), e2.clone()), y.clone()));
                self.le1(&loc, "pre <= e |-> - ** (e |-> e' -** post)", x, &rhs, cert)?;
            }
            Rule::Disp => {
                self.invariant(&loc, c, "conclusion")?;
                let Command::Free(e) = &c.cmd else { return Err(Self::shape(&loc, "disp applies to `free(e)`")) };
                self.le1(&loc, "pre <= post ** e |-> -", x, &sep(y, &Expectation::allocated(e.clone())), cert)?;
            }
            Rule::Div => {
                self.invariant(&loc, c, "conclusion")?;
                Self::expect(&loc, matches!(c.cmd, Command::Diverge), "div applies to `diverge`")?;
            }
            Rule::Seq => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let Command::Seq(c1, c2) = &c.cmd else { return Err(Self::shape(&loc, "seq applies to `C1; C2`")) };
                let (p1, p2) = (ps[0], ps[1]);
                Self::same_cmd(&loc, &p1.cmd, c1, "premise 0")?;
                Self::same_cmd(&loc, &p2.cmd, c2, "premise 1")?;
                for p in [p1, p2] {
                    let pi = self.invariant(&loc, p, "premise")?;
                    self.same_invariant(&loc, pi, i, cert)?;
                }
                self.le1(&loc, "pre <= pre of C1", x, &p1.pre, cert)?;
                match &n.payload.mid {
                    Some(mid) => {
                        self.le1(&loc, "post of C1 <= mid", &p1.post, mid, cert)?;
                        self.le1(&loc, "mid <= pre of C2", mid, &p2.pre, cert)?;
                    }
                    None => self.le1(&loc, "post of C1 <= pre of C2", &p1.post, &p2.pre, cert)?,
                }
                self.le1(&loc, "post of C2 <= post", &p2.post, y, cert)?;
            }
            Rule::If => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let Command::IfThenElse(g, c1, c2) = &c.cmd else { return Err(Self::shape(&loc, "if applies to conditionals")) };
                self.branches(&loc, i, y, &ps, [c1, c2], cert)?;
                let rhs = Lin::sum([
                    Expectation::mul(Expectation::guard(g.clone()), ps[0].pre.clone()),
                    Expectation::mul(Expectation::guard(crate::syntax::Guard::not(g.clone())), ps[1].pre.clone()),
                ]);
                self.le(&loc, "pre <= [B]*X1 + [not B]*X2", &Lin::one(x), &rhs, cert)?;
            }
            Rule::PChoice => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let Command::ProbChoice(c1, p, c2) = &c.cmd else { return Err(Self::shape(&loc, "p-choice applies to probabilistic choice")) };
                self.branches(&loc, i, y, &ps, [c1, c2], cert)?;
                let rhs = Lin::sum([
                    Expectation::mul(Expectation::from_prob(p), ps[0].pre.clone()),
                    Expectation::mul(Expectation::from_prob(&p.complement()), ps[1].pre.clone()),
                ]);
                self.le(&loc, "pre <= p*X1 + (1-p)*X2", &Lin::one(x), &rhs, cert)?;
            }
            Rule::While => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let Command::While(g, body) = &c.cmd else { return Err(Self::shape(&loc, "while applies to loops")) };
                let p = ps[0];
                Self::same_cmd(&loc, &p.cmd, body, "premise 0")?;
                let pi = self.invariant(&loc, p, "premise")?;
                self.same_invariant(&loc, pi, i, cert)?;
                let inv = n.payload.loop_invariant.as_ref().unwrap_or(x);
                self.le1(&loc, "pre <= J", x, inv, cert)?;
                self.le1(&loc, "post of body <= J", &p.post, inv, cert)?;
                let rhs = Lin::sum([
                    Expectation::mul(Expectation::guard(g.clone()), p.pre.clone()),
                    Expectation::mul(Expectation::guard(crate::syntax::Guard::not(g.clone())), y.clone()),
                ]);
                self.le(&loc, "J <= [B]*X + [not B]*Y", &Lin::one(inv), &rhs, cert)?;
            }
            Rule::Atomic => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let Command::Atomic(body) = &c.cmd else { return Err(Self::shape(&loc, "atomic applies to atomic regions")) };
                if !is_tame(body) {
                    return Err(CheckError::NotTame { location: loc });
                }
                cert.discharged.push(Discharged { location: loc.clone(), condition: "body tame".into() });
                let p = ps[0];
                Self::same_cmd(&loc, &p.cmd, body, "premise 0")?;
                let pi = self.invariant(&loc, p, "premise")?;
                self.same_invariant(&loc, pi, &emp, cert)?;
                self.le1(&loc, "pre ** I <= premise pre", &sep(x, i), &p.pre, cert)?;
                self.le1(&loc, "premise post <= post ** I", &p.post, &sep(y, i), cert)?;
            }
            Rule::Atom => {
                let i = self.invariant(&loc, c, "conclusion")?;
                if !is_terminating_atom(&c.cmd) {
                    return Err(CheckError::NotTerminatingAtom { location: loc });
                }
                cert.discharged.push(Discharged { location: loc.clone(), condition: "terminating atom".into() });
                let p = ps[0];
                Self::same_cmd(&loc, &p.cmd, &c.cmd, "premise 0")?;
                let pi = self.invariant(&loc, p, "premise")?;
                self.same_invariant(&loc, pi, &emp, cert)?;
                self.le1(&loc, "pre ** I <= premise pre", &sep(x, i), &p.pre, cert)?;
                self.le1(&loc, "premise post <= post ** I", &p.post, &sep(y, i), cert)?;
            }
            Rule::Share => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let pi_e = n.payload.pi.as_ref().ok_or_else(|| Self::shape(&loc, "share needs the shared expectation `pi`"))?;
                let p = ps[0];
                Self::same_cmd(&loc, &p.cmd, &c.cmd, "premise 0")?;
                let pinv = self.invariant(&loc, p, "premise")?;
                self.same_invariant(&loc, pinv, &sep(i, pi_e), cert)?;
                self.le1(&loc, "pre <= premise pre ** pi", x, &sep(&p.pre, pi_e), cert)?;
                self.le1(&loc, "premise post ** pi <= post", &sep(&p.post, pi_e), y, cert)?;
            }
            Rule::Concur => {
                let i = self.invariant(&loc, c, "conclusion")?;
                let Command::Concurrent(c1, c2) = &c.cmd else { return Err(Self::shape(&loc, "concur applies to `C1 ||| C2`")) };
                let (p1, p2) = (ps[0], ps[1]);
                Self::same_cmd(&loc, &p1.cmd, c1, "premise 0")?;
                Self::same_cmd(&loc, &p2.cmd, c2, "premise 1")?;
                for p in [p1, p2] {
                    let pi = self.invariant(&loc, p, "premise")?;
                    self.same_invariant(&loc, pi, i, cert)?;
                }
                for (k, (mine, other, other_post)) in [(c1, c2, &p2.post), (c2, c1, &p1.post)].into_iter().enumerate() {
                    let mut read = free_vars_cmd(other);
                    read.extend(other_post.free_vars());
                    read.extend(i.free_vars());
                    let (a, b) = (k + 1, 2 - k);
                    let cond = format!("wr(C{a}) disjoint from fv(C{b}, Y{b}, I)");
                    Self::disjoint_writes(&loc, &written_vars(mine), &read, cond, cert)?;
                }
                self.le1(&loc, "pre <= X1 ** X2", x, &sep(&p1.pre, &p2.pre), cert)?;
                self.le1(&loc, "Y1 ** Y2 <= post", &sep(&p1.post, &p2.post), y, cert)?;
            }
            Rule::Superlin => {
                if c.invariant.is_some() {
                    return Err(Self::shape(&loc, "superlin concludes a wlp statement"));
                }
                let a = n.payload.scalar.clone().ok_or_else(|| Self::shape(&loc, "superlin needs the scalar `a`"))?;
                if a < Rat::zero() {
                    return Err(CheckError::SideConditionFails {
                        location: loc,
                        condition: "a >= 0".into(),
                        witness: a.to_string(),
                    });
                }
                let (p1, p2) = (ps[0], ps[1]);
                for (k, p) in [p1, p2].into_iter().enumerate() {
                    if p.invariant.is_some() {
                        return Err(Self::shape(&loc, format!("premise {k} must be a wlp statement")));
                    }
                    Self::same_cmd(&loc, &p.cmd, &c.cmd, &format!("premise {k}"))?;
                }
                match n.payload.ast {
                    AstMode::Assert => cert.ast.push((loc.clone(), AstStatus::Asserted)),
                    AstMode::Verify => {
                        let rep = check_ast(&c.cmd, self.bounds, Limits::default()).map_err(Self::eval_err(&loc))?;
                        if rep.truncated {
                            return Err(CheckError::AstUnverified { location: loc, reason: "state space truncated".into() });
                        }
                        if !rep.ast {
                            let reason = match rep.witness.first() {
                                Some(w) => format!("a scheduler avoids termination from {w}"),
                                None => "no witness".into(),
                            };
                            return Err(CheckError::AstUnverified { location: loc, reason });
                        }
                        cert.ast.push((loc.clone(), AstStatus::Verified));
                    }
                }
                let lhs = Lin::one(x);
                let rhs = Lin(vec![(a.clone(), p1.pre.clone()), (Rat::one(), p2.pre.clone())]);
                self.le(&loc, "pre <= a*X' + Y'", &lhs, &rhs, cert)?;
                let lhs = Lin(vec![(a, p1.post.clone()), (Rat::one(), p2.post.clone())]);
                self.le(&loc, "a*X + Y <= post", &lhs, &Lin::one(y), cert)?;
            }
            Rule::WlpWrlp => {
                if c.invariant.is_some() {
                    return Err(Self::shape(&loc, "wlp-wrlp concludes a wlp statement"));
                }
                let p = ps[0];
                Self::same_cmd(&loc, &p.cmd, &c.cmd, "premise 0")?;
                let pi = self.invariant(&loc, p, "premise")?;
                self.same_invariant(&loc, pi, &emp, cert)?;
                self.le1(&loc, "pre <= premise pre", x, &p.pre, cert)?;
                self.le1(&loc, "premise post <= post", &p.post, y, cert)?;
            }
            Rule::Frame => {
                self.invariant(&loc, c, "conclusion")?;
                let z = n.payload.frame.as_ref().ok_or_else(|| Self::shape(&loc, "frame needs the frame expectation"))?;
                Self::disjoint_writes(&loc, &written_vars(&c.cmd), &z.free_vars(), "wr(C) disjoint from fv(Z)".into(), cert)?;
                let p = ps[0];
                self.le1(&loc, "pre <= premise pre ** Z", x, &sep(&p.pre, z), cert)?;
                self.le1(&loc, "premise post ** Z <= post", &sep(&p.post, z), y, cert)?;
            }
            Rule::Monotonic => {
                let p = ps[0];
                self.le1(&loc, "pre <= X'", x, &p.pre, cert)?;
                self.le1(&loc, "Y' <= post", &p.post, y, cert)?;
            }
            Rule::Max => {
                self.invariant(&loc, c, "conclusion")?;
                let (p1, p2) = (ps[0], ps[1]);
                self.le1(&loc, "pre <= max(X, X')", x, &Expectation::max(p1.pre.clone(), p2.pre.clone()), cert)?;
                self.le1(&loc, "max(Y, Y') <= post", &Expectation::max(p1.post.clone(), p2.post.clone()), y, cert)?;
            }
            Rule::Min => {
                let i = self.invariant(&loc, c, "conclusion")?;
                self.require_precise(&loc, i, cert)?;
                let (p1, p2) = (ps[0], ps[1]);
                self.le1(&loc, "pre <= min(X, X')", x, &Expectation::min(p1.pre.clone(), p2.pre.clone()), cert)?;
                self.le1(&loc, "min(Y, Y') <= post", &Expectation::min(p1.post.clone(), p2.post.clone()), y, cert)?;
            }
            Rule::Convex => {
                let i = self.invariant(&loc, c, "conclusion")?;
                self.require_precise(&loc, i, cert)?;
                let w = n.payload.weight.as_ref().ok_or_else(|| Self::shape(&loc, "convex needs the weight `E`"))?;
                let mut wv = BTreeSet::new();
                w.vars(&mut wv);
                Self::disjoint_writes(&loc, &written_vars(&c.cmd), &wv, "wr(C) disjoint from fv(E)".into(), cert)?;
                self.weight_in_range(&loc, w, &wv, cert)?;
                let (p1, p2) = (ps[0], ps[1]);
                let e = Expectation::from_prob(w);
                let ne = Expectation::from_prob(&w.complement());
                let rhs = Lin::sum([Expectation::mul(e.clone(), p1.pre.clone()), Expectation::mul(ne.clone(), p2.pre.clone())]);
                self.le(&loc, "pre <= E*X + (1-E)*X'", &Lin::one(x), &rhs, cert)?;
                let lhs = Lin::sum([Expectation::mul(e, p1.post.clone()), Expectation::mul(ne, p2.post.clone())]);
                self.le(&loc, "E*Y + (1-E)*Y' <= post", &lhs, &Lin::one(y), cert)?;
            }
        }
        Ok(())
    }

    fn expect(loc: &Location, ok: bool, msg: &str) -> Result<(), CheckError> {
        if ok {
            Ok(())
        } else {
            Err(Self::shape(loc, msg))
        }
    }

    /// Premises of a two-branch rule: one per branch command, same
    /// invariant, posts below the conclusion's post.
    fn branches(
        &self,
        loc: &Location,
        inv: &Expectation,
        post: &Expectation,
        ps: &[&Judgement],
        cmds: [&Arc<Command>; 2],
        cert: &mut Certificate,
    ) -> Result<(), CheckError> {
        for (k, (p, want)) in ps.iter().zip(cmds).enumerate() {
            Self::same_cmd(loc, &p.cmd, want, &format!("premise {k}"))?;
            let pi = self.invariant(loc, p, "premise")?;
            self.same_invariant(loc, pi, inv, cert)?;
            self.le1(loc, &format!("post of branch {k} <= post"), &p.post, post, cert)?;
        }
        Ok(())
    }

    fn weight_in_range(&self, loc: &Location, w: &ProbExpr, vars: &BTreeSet<VarName>, cert: &mut Certificate) -> Result<(), CheckError> {
        for s in enumerate_stacks(vars, self.bounds) {
            match eval_prob(w, &s) {
                Ok(_) => {}
                Err(Error::OutOfRange { value, .. }) => {
                    return Err(CheckError::SideConditionFails {
                        location: loc.clone(),
                        condition: "E within [0,1]".into(),
                        witness: format!("E = {value} at {s}"),
                    })
                }
                Err(e) => return Err(CheckError::Eval { location: loc.clone(), source: e }),
            }
        }
        cert.discharged.push(Discharged { location: loc.clone(), condition: "E within [0,1]".into() });
        Ok(())
    }
}
