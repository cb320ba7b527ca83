//! Generators, fixtures and independent oracles shared by the integration
//! tests and the acceptance harness.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use chp_core::expectation::{eval, Predicate};
use chp_core::state::{enumerate_heaps, enumerate_stacks, parse_initial_state};
use chp_core::syntax::{is_tame, parse_program, VarName};
use chp_core::{
    rat, ArithExpr, CmpOp, Command, DomainBounds, Expectation, Guard, Heap, ProbExpr, ProgState, Rat, Stack,
};
use num::{One, Zero};
use proptest::prelude::*;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture_program(name: &str) -> Command {
    parse_program(&read_fixture(&format!("{name}.chp"))).expect("fixture parses")
}

pub fn fixture_state(name: &str) -> ProgState {
    parse_initial_state(&read_fixture(&format!("{name}.init"))).expect("fixture state parses")
}

/// Two variables, values -1..=1, two locations, heaps of up to two cells.
pub fn small_bounds() -> DomainBounds {
    DomainBounds::new(["a", "b"].map(VarName::from), (-1, 1), [0, 1], 2).unwrap()
}

/// Like [`small_bounds`] with a third location, leaving room for frames.
pub fn frame_bounds() -> DomainBounds {
    DomainBounds::new(["a", "b"].map(VarName::from), (-1, 1), [0, 1, 2], 3).unwrap()
}

pub fn all_states(bounds: &DomainBounds) -> Vec<ProgState> {
    let heaps = enumerate_heaps(bounds);
    enumerate_stacks(&bounds.vars, bounds)
        .into_iter()
        .flat_map(|s| heaps.iter().map(move |h| ProgState::new(s.clone(), h.clone())))
        .collect()
}

// ---------------------------------------------------------------- generators

fn var_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["a", "b"])
}

pub fn arb_value() -> impl Strategy<Value = ArithExpr> {
    prop_oneof![(-1i64..=1).prop_map(ArithExpr::Lit), var_name().prop_map(ArithExpr::var)]
}

fn arb_loc() -> impl Strategy<Value = ArithExpr> {
    prop_oneof![(0i64..=1).prop_map(ArithExpr::Lit), var_name().prop_map(ArithExpr::var)]
}

fn arb_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le])
}

pub fn arb_guard() -> impl Strategy<Value = Guard> {
    let leaf = prop_oneof![
        1 => Just(Guard::True),
        4 => (arb_op(), arb_value(), arb_value()).prop_map(|(o, a, b)| Guard::Cmp(o, a, b)),
    ];
    leaf.prop_recursive(1, 3, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Guard::and(a, b)),
            inner.prop_map(Guard::not),
        ]
    })
}

fn arb_pred_atom() -> impl Strategy<Value = Predicate> {
    prop_oneof![
        Just(Predicate::Emp),
        (arb_loc(), arb_value()).prop_map(|(l, v)| Predicate::PointsTo(l, vec![v])),
        arb_loc().prop_map(Predicate::Allocated),
        arb_guard().prop_map(Predicate::StackGuard),
    ]
}

/// {0,1}-valued expectations.
pub fn arb_qualitative() -> impl Strategy<Value = Expectation> {
    let leaf = prop_oneof![
        4 => arb_pred_atom().prop_map(Expectation::iverson),
        1 => prop::sample::select(vec![Expectation::zero(), Expectation::one()]),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::max(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Expectation::sep(a, b)),
        ]
    })
}

fn arb_const() -> impl Strategy<Value = Expectation> {
    prop::sample::select(vec![rat(0, 1), rat(1, 4), rat(1, 3), rat(1, 2), rat(2, 3), rat(1, 1)])
        .prop_map(Expectation::constant)
}

/// One-bounded quantitative expectations built from every connective.
pub fn arb_expectation() -> impl Strategy<Value = Expectation> {
    let leaf = prop_oneof![
        2 => arb_const(),
        3 => arb_pred_atom().prop_map(Expectation::iverson),
        1 => (arb_guard(), arb_const()).prop_map(|(g, c)| Expectation::mul(Expectation::guard(g), c)),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::max(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::min(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::sep(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::add(
                Expectation::scale(rat(1, 2), a),
                Expectation::scale(rat(1, 2), b)
            )),
            (arb_qualitative(), inner.clone()).prop_map(|(g, b)| Expectation::wand(g, b)),
            (var_name(), inner.clone()).prop_map(|(x, b)| Expectation::sup(&VarName::from(x), b)),
            (var_name(), inner.clone()).prop_map(|(x, b)| Expectation::inf(&VarName::from(x), b)),
            (inner, var_name(), arb_value()).prop_map(|(b, x, e)| b.subst(&VarName::from(x), e)),
        ]
    })
}

/// Mostly precise expectations: points-to shapes, emp, and their separating
/// products scaled by constants or guards.
pub fn arb_precise() -> impl Strategy<Value = Expectation> {
    let leaf = prop_oneof![
        Just(Expectation::emp()),
        (arb_loc(), arb_value()).prop_map(|(l, v)| Expectation::pts(l, v)),
        arb_loc().prop_map(Expectation::allocated),
    ];
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expectation::sep(a, b)),
            (arb_const(), inner.clone()).prop_map(|(c, a)| Expectation::mul(c, a)),
            (arb_guard(), inner).prop_map(|(g, a)| Expectation::mul(Expectation::guard(g), a)),
        ]
    })
}

fn arb_prob() -> impl Strategy<Value = ProbExpr> {
    let lit = prop::sample::select(vec![rat(0, 1), rat(1, 3), rat(1, 2), rat(3, 4), rat(1, 1)]).prop_map(ProbExpr::Lit);
    prop_oneof![
        3 => lit.clone(),
        1 => (arb_guard(), lit.clone(), lit).prop_map(|(g, a, b)| ProbExpr::Cond(g, Box::new(a), Box::new(b))),
    ]
}

/// Commands over a and b. `probabilistic` admits `[p]`; `loops` admits
/// `while` (outside atomic regions, so atomic bodies stay acyclic).
pub fn arb_command(probabilistic: bool, loops: bool) -> BoxedStrategy<Command> {
    command_tree(probabilistic, loops, true)
}

fn primitive() -> BoxedStrategy<Command> {
    prop_oneof![
        1 => Just(Command::Terminated),
        1 => Just(Command::Diverge),
        4 => (var_name(), arb_value()).prop_map(|(x, e)| Command::assign(x, e)),
        3 => (var_name(), arb_loc()).prop_map(|(x, e)| Command::lookup(x, e)),
        3 => (arb_loc(), arb_value()).prop_map(|(l, v)| Command::mutate(l, v)),
        2 => arb_loc().prop_map(Command::Free),
    ]
    .boxed()
}

fn command_tree(probabilistic: bool, loops: bool, heapful: bool) -> BoxedStrategy<Command> {
    let leaf = if heapful {
        prop_oneof![
            6 => primitive(),
            1 => (var_name(), prop::collection::vec(arb_value(), 1..=2))
                .prop_map(|(x, es)| Command::Alloc(VarName::from(x), es)),
        ]
        .boxed()
    } else {
        primitive()
    };
    leaf.prop_recursive(3, 8, 2, move |inner| {
        let mut arms: Vec<(u32, BoxedStrategy<Command>)> = vec![
            (3, (inner.clone(), inner.clone()).prop_map(|(a, b)| Command::seq(a, b)).boxed()),
            (2, (arb_guard(), inner.clone(), inner.clone()).prop_map(|(g, a, b)| Command::ite(g, a, b)).boxed()),
            (1, command_tree(probabilistic, false, false).prop_map(Command::atomic).boxed()),
        ];
        if heapful {
            arms.push((2, (inner.clone(), inner.clone()).prop_map(|(a, b)| Command::par(a, b)).boxed()));
        }
        if probabilistic {
            arms.push((
                2,
                (inner.clone(), arb_prob(), inner.clone())
                    .prop_map(|(a, p, b)| Command::ProbChoice(Arc::new(a), p, Arc::new(b)))
                    .boxed(),
            ));
        }
        if loops {
            arms.push((1, (arb_guard(), inner).prop_map(|(g, a)| Command::while_loop(g, a)).boxed()));
        }
        prop::strategy::Union::new_weighted(arms)
    })
    .boxed()
}

/// Programs of at most `max` AST nodes.
pub fn arb_small_program(probabilistic: bool, loops: bool, max: usize) -> impl Strategy<Value = Command> {
    arb_command(probabilistic, loops).prop_filter("small", move |c| c.size() <= max)
}

// ------------------------------------------------------------ step oracle

/// A configuration of the oracle's own semantics.
#[derive(Clone, Debug, PartialEq)]
enum Next {
    Run(Command, ProgState),
    Abort,
}

fn arith(e: &ArithExpr, s: &Stack) -> i64 {
    match e {
        ArithExpr::Lit(n) => *n,
        ArithExpr::Var(x) => s.get(x).expect("declared"),
        ArithExpr::Add(a, b) => arith(a, s) + arith(b, s),
        ArithExpr::Sub(a, b) => arith(a, s) - arith(b, s),
        ArithExpr::Mul(a, b) => arith(a, s) * arith(b, s),
    }
}

fn test(g: &Guard, s: &Stack) -> bool {
    match g {
        Guard::True => true,
        Guard::False => false,
        Guard::Cmp(op, a, b) => {
            let (a, b) = (arith(a, s), arith(b, s));
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            }
        }
        Guard::And(a, b) => test(a, s) && test(b, s),
        Guard::Or(a, b) => test(a, s) || test(b, s),
        Guard::Not(a) => !test(a, s),
    }
}

fn prob(p: &ProbExpr, s: &Stack) -> Rat {
    match p {
        ProbExpr::Lit(q) => q.clone(),
        ProbExpr::Cond(g, a, b) => prob(if test(g, s) { a } else { b }, s),
    }
}

fn set(s: &Stack, x: &VarName, v: i64) -> Stack {
    let mut s = s.clone();
    s.set(x, v);
    s
}

fn done(s: Stack, h: Heap) -> Next {
    Next::Run(Command::Terminated, ProgState::new(s, h))
}

/// Every enabled action as its successor distribution.
fn actions(c: &Command, st: &ProgState, bounds: &DomainBounds) -> Vec<Vec<(Next, Rat)>> {
    let (s, h) = (&st.stack, &st.heap);
    let sure = |n: Next| vec![vec![(n, Rat::one())]];
    match c {
        Command::Terminated => vec![],
        Command::Diverge => sure(Next::Run(Command::Diverge, st.clone())),
        Command::Assign(x, e) => sure(done(set(s, x, arith(e, s)), h.clone())),
        Command::Lookup(x, e) => match h.get(arith(e, s)) {
            Some(v) => sure(done(set(s, x, v), h.clone())),
            None => sure(Next::Abort),
        },
        Command::Mutate(e, v) => {
            let l = arith(e, s);
            if h.contains(l) {
                sure(done(s.clone(), h.with(l, arith(v, s))))
            } else {
                sure(Next::Abort)
            }
        }
        Command::Free(e) => {
            let l = arith(e, s);
            if h.contains(l) {
                sure(done(s.clone(), h.without(l)))
            } else {
                sure(Next::Abort)
            }
        }
        Command::Alloc(x, es) => {
            let vals: Vec<i64> = es.iter().map(|e| arith(e, s)).collect();
            let mut out = Vec::new();
            for &l in &bounds.locations {
                let cells: Vec<i64> = (l..l + vals.len() as i64).collect();
                if cells.iter().all(|c| bounds.locations.contains(c) && !h.contains(*c)) {
                    let h2 = cells.iter().zip(&vals).fold(h.clone(), |h, (&c, &v)| h.with(c, v));
                    out.push(vec![(done(set(s, x, l), h2), Rat::one())]);
                }
            }
            out
        }
        Command::ProbChoice(a, p, b) => {
            let q = prob(p, s);
            vec![vec![
                (Next::Run((**a).clone(), st.clone()), q.clone()),
                (Next::Run((**b).clone(), st.clone()), Rat::one() - q),
            ]]
        }
        Command::Seq(a, b) => {
            if **a == Command::Terminated {
                return actions(b, st, bounds);
            }
            let wrap = |n: Next| match n {
                Next::Run(a2, st2) => Next::Run(Command::Seq(Arc::new(a2), b.clone()), st2),
                Next::Abort => Next::Abort,
            };
            map_actions(actions(a, st, bounds), wrap)
        }
        Command::IfThenElse(g, a, b) => sure(Next::Run(if test(g, s) { (**a).clone() } else { (**b).clone() }, st.clone())),
        Command::While(g, body) => {
            if test(g, s) {
                sure(Next::Run(Command::Seq(body.clone(), Arc::new(c.clone())), st.clone()))
            } else {
                sure(done(s.clone(), h.clone()))
            }
        }
        Command::Atomic(body) => {
            if !is_tame(body) {
                return vec![];
            }
            let mut out = Vec::new();
            let mut div = Rat::zero();
            run_atomic(body, st, Rat::one(), bounds, &mut out, &mut div);
            if !div.is_zero() {
                out.push((Next::Run(Command::Diverge, st.clone()), div));
            }
            vec![out]
        }
        Command::Concurrent(a, b) => {
            if **a == Command::Terminated && **b == Command::Terminated {
                return sure(done(s.clone(), h.clone()));
            }
            let left = map_actions(actions(a, st, bounds), |n| match n {
                Next::Run(a2, st2) => Next::Run(Command::Concurrent(Arc::new(a2), b.clone()), st2),
                Next::Abort => Next::Abort,
            });
            let right = map_actions(actions(b, st, bounds), |n| match n {
                Next::Run(b2, st2) => Next::Run(Command::Concurrent(a.clone(), Arc::new(b2)), st2),
                Next::Abort => Next::Abort,
            });
            left.into_iter().chain(right).collect()
        }
    }
}

fn map_actions(acts: Vec<Vec<(Next, Rat)>>, f: impl Fn(Next) -> Next) -> Vec<Vec<(Next, Rat)>> {
    acts.into_iter().map(|d| d.into_iter().map(|(n, p)| (f(n), p)).collect()).collect()
}

/// Unfolds an acyclic tame body path by path. A stuck configuration or one
/// that steps surely to itself contributes its mass to divergence.
fn run_atomic(c: &Command, st: &ProgState, mass: Rat, bounds: &DomainBounds, out: &mut Vec<(Next, Rat)>, div: &mut Rat) {
    if mass.is_zero() {
        return;
    }
    if *c == Command::Terminated {
        out.push((Next::Run(Command::Terminated, st.clone()), mass));
        return;
    }
    let acts = actions(c, st, bounds);
    let Some(dist) = acts.into_iter().next() else {
        *div += mass;
        return;
    };
    for (n, p) in dist {
        match n {
            Next::Abort => out.push((Next::Abort, &mass * p)),
            Next::Run(c2, st2) => {
                if c2 == *c && st2 == *st {
                    *div += &mass * p;
                } else {
                    run_atomic(&c2, &st2, &mass * p, bounds, out, div);
                }
            }
        }
    }
}

/// wslp_n with the trivial invariant by direct depth-n unrolling: 1 at depth
/// 0, X at `↓`, 0 for abort, 1 without enabled actions, and otherwise the
/// least expected value over the enabled actions.
pub fn oracle_wslp(c: &Command, st: &ProgState, post: &Expectation, n: usize, bounds: &DomainBounds) -> Rat {
    if n == 0 {
        return Rat::one();
    }
    if *c == Command::Terminated {
        return eval(post, st, bounds).expect("post evaluates");
    }
    actions(c, st, bounds)
        .into_iter()
        .map(|d| {
            d.into_iter()
                .map(|(next, p)| match next {
                    Next::Abort => Rat::zero(),
                    Next::Run(c2, st2) => p * oracle_wslp(&c2, &st2, post, n - 1, bounds),
                })
                .fold(Rat::zero(), |a, b| a + b)
        })
        .min()
        .unwrap_or_else(Rat::one)
}

/// `x := 0; while (x = 0) { {x := 1} [q] {{x := 2} [r] {x := 0}} }`: each
/// round exits at 1 w.p. q, at 2 w.p. (1-q)r and repeats otherwise, so the
/// exit law is geometric and P(x = 1) = q / (q + (1-q)r).
pub fn geometric_exit(q: &Rat, r: &Rat) -> (Rat, Rat) {
    let one_round = q + (Rat::one() - q) * r;
    (q / &one_round, (Rat::one() - q) * r / one_round)
}

// ------------------------------------------------------------ fixtures

pub struct Fixture {
    pub name: &'static str,
    pub program: Command,
    pub init: ProgState,
    pub post: Expectation,
    pub bounds: DomainBounds,
}

fn bounds_for(vars: &[&str], values: (i64, i64), locs: &[i64]) -> DomainBounds {
    DomainBounds::new(vars.iter().map(|&v| VarName::from(v)), values, locs.iter().copied(), locs.len()).unwrap()
}

fn load(name: &'static str, post: &str, bounds: DomainBounds) -> Fixture {
    let post = chp_core::expectation::parse_expectation(&read_fixture(post)).expect("fixture expectation parses");
    Fixture { name, program: fixture_program(name), init: fixture_state(name), post, bounds }
}

/// The five fixtures whose wlp the engine computes exactly.
pub fn exact_fixtures() -> Vec<Fixture> {
    vec![
        load("running", "running.exp", bounds_for(&["r", "y"], (-1, 1), &[0])),
        load("jones", "jones_zero.exp", bounds_for(&["x"], (-1, 1), &[0])),
        load("diverge", "diverge.exp", bounds_for(&[], (-1, 1), &[0])),
        load("geometric", "geometric.exp", bounds_for(&["x"], (0, 2), &[0])),
        load("prodcons", "prodcons.exp", chp_core::proofcheck::producer_consumer_bounds(1)),
    ]
}

pub fn policies() -> Vec<chp_core::simulate::Policy> {
    use chp_core::simulate::Policy;
    vec![Policy::UniformRandom(11), Policy::FixedPriority(vec!["C1".into()]), Policy::RoundRobinThreads(23)]
}

// ------------------------------------------------------------ property bodies

pub const DEPTH: usize = 6;

fn wslp_table(c: &Command, post: &Expectation, n: usize) -> Result<Vec<(ProgState, Rat)>, String> {
    let b = small_bounds();
    chp_core::analysis::wslp_n(c, post, &Expectation::emp(), &b, n, &all_states(&b)).map_err(|e| e.to_string())
}

/// The engine's wslp_n equals the unrolling oracle at every state.
pub fn oracle_case(c: &Command, post: &Expectation) -> Result<(), String> {
    let b = small_bounds();
    for n in [0, 1, 2, 3, DEPTH] {
        for (st, v) in wslp_table(c, post, n)? {
            let want = oracle_wslp(c, &st, post, n, &b);
            if v != want {
                return Err(format!("wslp_{n}({c}) at {st}: engine {v}, oracle {want}"));
            }
        }
    }
    Ok(())
}

/// 0 <= wslp_n <= 1, wslp_0 = 1 and wslp_{n+1} <= wslp_n.
pub fn bounded_antitone_case(c: &Command, post: &Expectation) -> Result<(), String> {
    let mut prev = wslp_table(c, post, 0)?;
    if let Some((st, v)) = prev.iter().find(|(_, v)| !v.is_one()) {
        return Err(format!("wslp_0({c}) at {st} is {v}"));
    }
    for n in 1..=DEPTH {
        let cur = wslp_table(c, post, n)?;
        for ((st, a), (_, b)) in cur.iter().zip(&prev) {
            if *a < Rat::zero() || *a > Rat::one() || a > b {
                return Err(format!("wslp_{n}({c}) at {st} is {a}, wslp_{} is {b}", n - 1));
            }
        }
        prev = cur;
    }
    Ok(())
}

/// X <= max(X, Z) carries over to wslp_n.
pub fn monotone_case(c: &Command, x: &Expectation, z: &Expectation) -> Result<(), String> {
    let bigger = Expectation::max(x.clone(), z.clone());
    for n in [1, 3, DEPTH] {
        for ((st, a), (_, b)) in wslp_table(c, x, n)?.iter().zip(&wslp_table(c, &bigger, n)?) {
            if a > b {
                return Err(format!("wslp_{n}({c}) at {st}: {a} for X but {b} for max(X, Z)"));
            }
        }
    }
    Ok(())
}

/// Every way to split the cells of `h` between the program and a frame.
fn splits(h: &Heap) -> Vec<(Heap, Heap)> {
    let cells: Vec<(i64, i64)> = h.cells().collect();
    (0..1u32 << cells.len())
        .map(|mask| {
            let (own, frame): (Vec<_>, Vec<_>) = cells.iter().enumerate().partition(|(i, _)| mask & (1 << i) == 0);
            (
                Heap::from_cells(own.into_iter().map(|(_, c)| *c)),
                Heap::from_cells(frame.into_iter().map(|(_, c)| *c)),
            )
        })
        .collect()
}

/// For every state and frame: whenever an action enabled on the framed heap
/// steps the unframed configuration to `C', (s', h')`, it steps the framed
/// one to `C', (s', h' ⋆ h_F)`.
pub fn frame_case(c: &Command) -> Result<(), String> {
    use chp_core::semantics::Stepper;
    use chp_core::Config;
    let b = frame_bounds();
    let stepper = Stepper::new(&b);
    let cmd = Arc::new(c.clone());
    let err = |e: chp_core::Error| e.to_string();
    for s in enumerate_stacks(&b.vars, &b) {
        for whole in enumerate_heaps(&b) {
            let big = Config::Running(cmd.clone(), ProgState::new(s.clone(), whole.clone()));
            let big_steps = stepper.steps(&big).map_err(err)?;
            for (own, frame) in splits(&whole) {
                let small = Config::Running(cmd.clone(), ProgState::new(s.clone(), own));
                let small_steps = stepper.steps(&small).map_err(err)?;
                for (a, big_dist) in &big_steps {
                    let Some((_, d)) = small_steps.iter().find(|(l, _)| l == a) else { continue };
                    let [(Config::Running(c2, st2), p)] = d.as_slice() else { continue };
                    if !p.is_one() {
                        return Err(format!("{a} from {small} is not Dirac"));
                    }
                    let framed = st2.heap.union(&frame).map_err(err)?;
                    let want = Config::Running(c2.clone(), ProgState::new(st2.stack.clone(), framed));
                    if big_dist.len() != 1 || big_dist[0].0 != want {
                        return Err(format!("{a} from {small} with frame {frame:?} gives {big_dist:?}"));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn law_case(inp: &chp_core::expectation::laws::LawInputs) -> Result<(), String> {
    let report = chp_core::expectation::laws::check_laws(inp, &small_bounds()).map_err(|e| e.to_string())?;
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(format!("{v:?} for {inp:?}")),
    }
}

pub fn arb_law_inputs() -> impl Strategy<Value = chp_core::expectation::laws::LawInputs> {
    (arb_expectation(), arb_expectation(), arb_expectation(), arb_qualitative(), arb_qualitative(), arb_precise())
        .prop_map(|(x, y, z, phi, psi, precise)| chp_core::expectation::laws::LawInputs { x, y, z, phi, psi, precise })
}

pub const SIM_STEP_CAP: usize = 2_000;

/// Each policy's estimate on each exact fixture is at least wlp - 3 stderr,
/// and a second run with the same seed reproduces the statistics.
pub fn dominance(trials: usize) -> Result<Vec<String>, String> {
    use chp_core::analysis::{wlp_bracket, BracketOptions};
    use chp_core::simulate::estimate_liberal;
    use num::ToPrimitive;
    let mut rows = Vec::new();
    for f in exact_fixtures() {
        let err = |e: chp_core::Error| format!("{}: {e}", f.name);
        let wlp = wlp_bracket(&f.program, &f.post, &f.init, &f.bounds, &BracketOptions::default()).map_err(err)?;
        if !wlp.bracket.is_exact() {
            return Err(format!("{}: bracket {:?} is not exact", f.name, wlp.bracket));
        }
        let exact = wlp.bracket.lower.to_f64().unwrap_or(f64::NAN);
        for policy in policies() {
            let run = || estimate_liberal(&f.program, &f.post, &f.init, &policy, trials, SIM_STEP_CAP, 7, &f.bounds);
            let est = run().map_err(err)?;
            if run().map_err(err)? != est {
                return Err(format!("{} under {policy}: seed 7 does not reproduce", f.name));
            }
            let mean = est.mean.to_f64().unwrap_or(f64::NAN);
            if mean < exact - 3.0 * est.stderr {
                return Err(format!("{} under {policy}: {} below wlp {exact}", f.name, est.tsv()));
            }
            rows.push(format!("{}\t{policy}\twlp {exact}\t{}", f.name, est.tsv()));
        }
    }
    Ok(rows)
}
