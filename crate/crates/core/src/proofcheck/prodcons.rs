//! The producer / channel / consumer pipeline and its derivation.
//!
//! The producer writes k+1 values from {1, 2} into the first array, the
//! channel copies each cell into the second array when its coin comes up
//! and writes -1 otherwise, and the consumer counts the non-failures in `l`.
//! For a set J of indices that must survive the channel, the derivation
//! certifies that `l` ends up at |J ∩ [0, k]| with probability at least
//! p^|J ∩ [0,k]| (1-p)^|[0,k] \ J|.

use std::collections::BTreeSet;
use std::sync::Arc;

use num::{One, Zero};

use super::{check, Certificate, CheckError, Judgement, Payload, ProofNode, Rule};
use crate::syntax::{parse_program, ArithExpr, CmpOp, Command, Guard, VarName};
use crate::{DomainBounds, Expectation, Rat};

/// Base address of the producer's array.
const BASE1: i64 = 0;

fn base2(k: i64) -> i64 {
    k + 1
}

fn var(x: &str) -> ArithExpr {
    ArithExpr::var(x)
}

fn lit(n: i64) -> ArithExpr {
    ArithExpr::Lit(n)
}

fn cmp(op: CmpOp, a: impl Into<ArithExpr>, b: impl Into<ArithExpr>) -> Guard {
    Guard::cmp(op, a, b)
}

fn between(lo: i64, x: &str, hi: i64) -> Guard {
    Guard::and(cmp(CmpOp::Le, lo, var(x)), cmp(CmpOp::Le, var(x), hi))
}

fn iv(g: Guard) -> Expectation {
    Expectation::guard(g)
}

fn times(a: Expectation, b: Expectation) -> Expectation {
    Expectation::mul(a, b)
}

fn in_set(x: &str, set: &BTreeSet<i64>) -> Guard {
    set.iter()
        .map(|&j| cmp(CmpOp::Eq, var(x), j))
        .reduce(Guard::or)
        .unwrap_or(Guard::False)
}

/// Probability that cells 0..=j all take the outcome J asks for.
fn prefix_mass(j: i64, p: &Rat, set: &BTreeSet<i64>) -> Rat {
    let mut m = Rat::one();
    for i in 0..=j {
        m *= if set.contains(&i) { p.clone() } else { Rat::one() - p };
    }
    m
}

pub fn producer_consumer_program(k: i64, p: &Rat) -> Command {
    let b2 = base2(k);
    let p = crate::syntax::fmt_rational(p);
    let text = format!(
        "l := 0; y1 := {k}; y2 := {k}; y3 := {k};
{{ while (y1 >= 0) {{ {{ x1 := 1 }} [1/2] {{ x1 := 2 }}; <{BASE1} + y1> := x1; y1 := y1 - 1 }} }}
|||
{{ {{ while (y2 >= 0) {{ x2 := <{BASE1} + y2>; if (x2 != 0) {{ {{ <{b2} + y2> := x2 }} [{p}] {{ <{b2} + y2> := -1 }}; y2 := y2 - 1 }} }} }}
   |||
   {{ while (y3 >= 0) {{ x3 := <{b2} + y3>; if (x3 != 0) {{ if (x3 != -1) {{ l := l + 1 }}; y3 := y3 - 1 }} }} }} }}"
    );
    parse_program(&text).expect("the pipeline program parses")
}

/// Variables l, x1..x3, y1..y3, values -1..=2, both arrays allocatable.
pub fn producer_consumer_bounds(k: i64) -> DomainBounds {
    let vars = ["l", "x1", "x2", "x3", "y1", "y2", "y3"].map(VarName::from);
    let cells = usize::try_from(2 * k + 2).expect("k is nonnegative");
    DomainBounds::new(vars, (-1, 2), 0..=2 * k + 1, cells).expect("pipeline bounds are valid")
}

fn cell(base: i64, i: i64, allowed: &[i64]) -> Expectation {
    Expectation::max_all(allowed.iter().map(|&v| Expectation::pts(base + i, v)))
}

/// Shared resource: every producer cell holds 0, 1 or 2; a channel cell at
/// an index in J holds 0, 1 or 2, and any other channel cell holds 0 or -1.
pub fn resource_invariant(k: i64, set: &BTreeSet<i64>) -> Expectation {
    let b2 = base2(k);
    let mut cells: Vec<Expectation> = (0..=k).map(|i| cell(BASE1, i, &[0, 1, 2])).collect();
    for i in 0..=k {
        let allowed: &[i64] = if set.contains(&i) { &[0, 1, 2] } else { &[0, -1] };
        cells.push(cell(b2, i, allowed));
    }
    cells.into_iter().reduce(Expectation::sep).unwrap_or_else(Expectation::emp)
}

/// Σ_j [e = j] · (probability that cells 0..=j went as J asks), j ∈ [-1, k].
pub fn transfer_mass(e: ArithExpr, k: i64, p: &Rat, set: &BTreeSet<i64>) -> Expectation {
    Expectation::sum_all((-1..=k).filter_map(|j| {
        let m = prefix_mass(j, p, set);
        let at = iv(cmp(CmpOp::Eq, e.clone(), j));
        if m.is_zero() {
            None
        } else if m.is_one() {
            Some(at)
        } else {
            Some(times(at, Expectation::constant(m)))
        }
    }))
}

/// [l equals the number of indices in J above y], for y ∈ [-1, k].
fn remaining(y: ArithExpr, l: ArithExpr, k: i64, set: &BTreeSet<i64>) -> Expectation {
    Expectation::sum_all((-1..=k).map(|j| {
        let left = i64::try_from(set.iter().filter(|&&i| j < i && i <= k).count()).expect("small count");
        times(iv(cmp(CmpOp::Eq, y.clone(), j)), iv(cmp(CmpOp::Eq, l.clone(), left)))
    }))
}

fn hits(k: i64, set: &BTreeSet<i64>) -> i64 {
    i64::try_from(set.iter().filter(|&&i| (0..=k).contains(&i)).count()).expect("small count")
}

pub fn producer_invariant(k: i64) -> Expectation {
    iv(cmp(CmpOp::Le, var("y1"), k))
}

pub fn channel_invariant(k: i64, p: &Rat, set: &BTreeSet<i64>) -> Expectation {
    Expectation::add(
        times(iv(between(0, "y2", k)), transfer_mass(var("y2"), k, p, set)),
        iv(cmp(CmpOp::Lt, var("y2"), 0)),
    )
}

pub fn consumer_invariant(k: i64, set: &BTreeSet<i64>) -> Expectation {
    Expectation::add(
        times(iv(between(0, "y3", k)), remaining(var("y3"), var("l"), k, set)),
        times(iv(cmp(CmpOp::Lt, var("y3"), 0)), iv(cmp(CmpOp::Eq, var("l"), hits(k, set)))),
    )
}

fn parts2(c: &Command) -> (&Arc<Command>, &Arc<Command>) {
    match c {
        Command::Seq(a, b) | Command::Concurrent(a, b) | Command::IfThenElse(_, a, b) | Command::ProbChoice(a, _, b) => {
            (a, b)
        }
        other => panic!("unexpected pipeline shape: {other}"),
    }
}

fn loop_body(c: &Command) -> &Arc<Command> {
    match c {
        Command::While(_, body) => body,
        other => panic!("unexpected pipeline shape: {other}"),
    }
}

struct Builder<'a> {
    ri: Expectation,
    k: i64,
    p: &'a Rat,
    set: &'a BTreeSet<i64>,
}

impl Builder<'_> {
    fn judge(&self, pre: &Expectation, cmd: &Command, post: &Expectation) -> Judgement {
        Judgement::new(pre.clone(), cmd.clone(), post.clone(), self.ri.clone())
    }

    fn node(&self, rule: Rule, pre: &Expectation, cmd: &Command, post: &Expectation, ps: Vec<ProofNode>) -> ProofNode {
        ProofNode::new(rule, self.judge(pre, cmd, post), ps)
    }

    fn assign(&self, cmd: &Command, post: &Expectation) -> (Expectation, ProofNode) {
        let Command::Assign(x, e) = cmd else { panic!("unexpected pipeline shape: {cmd}") };
        let pre = post.clone().subst(x, e.clone());
        let n = self.node(Rule::Assign, &pre, cmd, post, vec![]);
        (pre, n)
    }

    /// A heap access proved by its basic rule under `emp` with the resource
    /// invariant carried in the pre and post, lifted by `atom`.
    fn atom(&self, basic: Rule, pre: &Expectation, cmd: &Command, post: &Expectation) -> ProofNode {
        let inner = ProofNode::new(
            basic,
            Judgement::new(
                Expectation::sep(pre.clone(), self.ri.clone()),
                cmd.clone(),
                Expectation::sep(post.clone(), self.ri.clone()),
                Expectation::emp(),
            ),
            vec![],
        );
        self.node(Rule::Atom, pre, cmd, post, vec![inner])
    }

    fn seq(&self, pre: &Expectation, cmd: &Command, post: &Expectation, a: ProofNode, b: ProofNode) -> ProofNode {
        self.node(Rule::Seq, pre, cmd, post, vec![a, b])
    }

    fn while_node(&self, inv: &Expectation, cmd: &Command, post: &Expectation, body: ProofNode) -> ProofNode {
        self.node(Rule::While, inv, cmd, post, vec![body])
            .with_payload(Payload { loop_invariant: Some(inv.clone()), ..Payload::default() })
    }

    fn producer(&self, c1: &Command) -> ProofNode {
        let k = self.k;
        let inv = producer_invariant(k);
        let body = loop_body(c1);
        let (choice, rest) = parts2(body);
        let (write, dec) = parts2(rest);
        let (after_write, dec_node) = self.assign(dec, &inv);
        let stored = times(iv(between(0, "y1", k)), iv(between(1, "x1", 2)));
        let write_node = self.atom(Rule::Mut, &stored, write, &after_write);
        let rest_node = self.seq(&stored, rest, &inv, write_node, dec_node);
        let (one, two) = parts2(choice);
        let (_, n1) = self.assign(one, &stored);
        let (_, n2) = self.assign(two, &stored);
        let guarded = iv(between(0, "y1", k));
        let choice_node = ProofNode::new(Rule::PChoice, self.judge(&guarded, choice, &stored), vec![n1, n2]);
        let body_node = self.seq(&guarded, body, &inv, choice_node, rest_node);
        self.while_node(&inv, c1, &Expectation::one(), body_node)
    }

    fn channel(&self, c2: &Command) -> ProofNode {
        let (k, p, set) = (self.k, self.p, self.set);
        let inv = channel_invariant(k, p, set);
        let body = loop_body(c2);
        let (read, branch) = parts2(body);
        let (forward, skip) = parts2(branch);
        let (choice, dec) = parts2(forward);
        let (after, dec_node) = self.assign(dec, &inv);
        let earlier = times(iv(between(0, "y2", k)), transfer_mass(ArithExpr::sub(var("y2"), lit(1)), k, p, set));
        let keep = times(times(earlier.clone(), iv(in_set("y2", set))), iv(between(1, "x2", 2)));
        let fail = times(earlier, iv(Guard::not(in_set("y2", set))));
        let (copy, drop) = parts2(choice);
        let copy_node = self.atom(Rule::Mut, &keep, copy, &after);
        let drop_node = self.atom(Rule::Mut, &fail, drop, &after);
        let mixed = Expectation::add(
            times(Expectation::constant(p.clone()), keep),
            times(Expectation::constant(Rat::one() - p), fail),
        );
        let choice_node = ProofNode::new(Rule::PChoice, self.judge(&mixed, choice, &after), vec![copy_node, drop_node]);
        let forward_node = self.seq(&mixed, forward, &inv, choice_node, dec_node);
        let skip_node = self.node(Rule::Term, &inv, skip, &inv, vec![]);
        let Command::IfThenElse(g, _, _) = branch.as_ref() else { unreachable!() };
        let branch_pre = Expectation::add(times(iv(g.clone()), mixed), times(iv(Guard::not(g.clone())), inv.clone()));
        let branch_node = self.node(Rule::If, &branch_pre, branch, &inv, vec![forward_node, skip_node]);
        let guarded = times(iv(between(0, "y2", k)), transfer_mass(var("y2"), k, p, set));
        let read_node = self.atom(Rule::Look, &guarded, read, &branch_pre);
        let body_node = self.seq(&guarded, body, &inv, read_node, branch_node);
        self.while_node(&inv, c2, &Expectation::one(), body_node)
    }

    fn consumer(&self, c3: &Command) -> ProofNode {
        let (k, set) = (self.k, self.set);
        let inv = consumer_invariant(k, set);
        let done = iv(cmp(CmpOp::Eq, var("l"), hits(k, set)));
        let body = loop_body(c3);
        let (read, branch) = parts2(body);
        let (count_then_dec, skip) = parts2(branch);
        let (count, dec) = parts2(count_then_dec);
        let (after, dec_node) = self.assign(dec, &inv);
        let (bump, no_bump) = parts2(count);
        let (bumped, bump_node) = self.assign(bump, &after);
        let no_bump_node = self.node(Rule::Term, &after, no_bump, &after, vec![]);
        let Command::IfThenElse(g_ok, _, _) = count.as_ref() else { unreachable!() };
        let count_pre =
            Expectation::add(times(iv(g_ok.clone()), bumped), times(iv(Guard::not(g_ok.clone())), after.clone()));
        let count_node = self.node(Rule::If, &count_pre, count, &after, vec![bump_node, no_bump_node]);
        let step_node = self.seq(&count_pre, count_then_dec, &inv, count_node, dec_node);
        let skip_node = self.node(Rule::Term, &inv, skip, &inv, vec![]);
        let Command::IfThenElse(g_full, _, _) = branch.as_ref() else { unreachable!() };
        let branch_pre =
            Expectation::add(times(iv(g_full.clone()), count_pre), times(iv(Guard::not(g_full.clone())), inv.clone()));
        let branch_node = self.node(Rule::If, &branch_pre, branch, &inv, vec![step_node, skip_node]);
        let guarded = times(iv(between(0, "y3", k)), remaining(var("y3"), var("l"), k, set));
        let read_node = self.atom(Rule::Look, &guarded, read, &branch_pre);
        let body_node = self.seq(&guarded, body, &inv, read_node, branch_node);
        self.while_node(&inv, c3, &done, body_node)
    }
}

/// The derivation of `{bound ⋆ RI} C {[l = |J ∩ [0,k]|] ⋆ RI}` for the
/// pipeline, as a tree of rule applications ready for [`check`].
pub fn producer_consumer_proof(k: i64, p: &Rat, set: &BTreeSet<i64>) -> ProofNode {
    let b = Builder { ri: resource_invariant(k, set), k, p, set };
    let program = producer_consumer_program(k, p);
    let done = iv(cmp(CmpOp::Eq, var("l"), hits(k, set)));

    // Peel the four initialising assignments.
    let mut prefix = Vec::new();
    let mut cur = &program;
    for _ in 0..4 {
        let (a, rest) = parts2(cur);
        prefix.push((cur, a.as_ref()));
        cur = rest;
    }
    let par = cur;
    let (c1, pipe) = parts2(par);
    let (c2, c3) = parts2(pipe);
    let (i2, i3) = (channel_invariant(k, p, set), consumer_invariant(k, set));
    let pipe_pre = Expectation::sep(i2, i3);
    let pipe_post = Expectation::sep(Expectation::one(), done.clone());
    let pipe_node = b.node(Rule::Concur, &pipe_pre, pipe, &pipe_post, vec![b.channel(c2), b.consumer(c3)]);
    let par_pre = Expectation::sep(producer_invariant(k), pipe_pre);
    let par_post = Expectation::sep(Expectation::one(), pipe_post);
    let mut node = b.node(Rule::Concur, &par_pre, par, &par_post, vec![b.producer(c1), pipe_node]);
    let mut pre = par_pre;
    for (whole, first) in prefix.into_iter().rev() {
        let (before, asg) = b.assign(first, &pre);
        node = b.seq(&before, whole, &par_post, asg, node);
        pre = before;
    }

    let bound = bound(k, p, set);
    let start = times(iv(cmp(CmpOp::Le, 0, k)), Expectation::constant(bound));
    node.conclusion.pre = start.clone();
    node.conclusion.post = done.clone();
    let shared = ProofNode::new(
        Rule::Share,
        Judgement::new(
            Expectation::sep(start.clone(), b.ri.clone()),
            program.clone(),
            Expectation::sep(done.clone(), b.ri.clone()),
            Expectation::emp(),
        ),
        vec![node],
    )
    .with_payload(Payload { pi: Some(b.ri.clone()), ..Payload::default() });
    ProofNode::new(
        Rule::WlpWrlp,
        Judgement::wlp(Expectation::sep(start, b.ri.clone()), program, Expectation::sep(done, b.ri)),
        vec![shared],
    )
}

fn bound(k: i64, p: &Rat, set: &BTreeSet<i64>) -> Rat {
    prefix_mass(k, p, set)
}

#[derive(Clone, Debug)]
pub struct ProdConsCertificate {
    /// p^|J ∩ [0,k]| (1-p)^|[0,k] \ J|.
    pub bound: Rat,
    pub pre: Expectation,
    pub post: Expectation,
    pub certificate: Certificate,
}

pub fn check_producer_consumer(
    k: i64,
    p: &Rat,
    set: &BTreeSet<i64>,
    bounds: &DomainBounds,
) -> Result<ProdConsCertificate, CheckError> {
    let proof = producer_consumer_proof(k, p, set);
    let certificate = check(&proof, bounds)?;
    Ok(ProdConsCertificate {
        bound: bound(k, p, set),
        pre: proof.conclusion.pre,
        post: proof.conclusion.post,
        certificate,
    })
}
