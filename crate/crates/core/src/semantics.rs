//! Small-step MDP semantics of chpGCL: enabled actions, one-step
//! distributions, exact resolution of atomic regions and explicit
//! construction of the reachable state space.

use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};

use crate::absorb::absorption;
use crate::error::{Error, Result};
use crate::state::{eval_arith, eval_guard, eval_prob, DomainBounds, ProgState};
use crate::syntax::{is_tame, Command};
use crate::Rat;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Config {
    Running(Arc<Command>, ProgState),
    Abort,
}

impl Config {
    pub fn new(cmd: Command, st: ProgState) -> Self {
        Config::Running(Arc::new(cmd), st)
    }

    /// `↓` or abort.
    pub fn is_final(&self) -> bool {
        match self {
            Config::Abort => true,
            Config::Running(c, _) => matches!(**c, Command::Terminated),
        }
    }

    pub fn state(&self) -> Option<&ProgState> {
        match self {
            Config::Running(_, st) => Some(st),
            Config::Abort => None,
        }
    }

    pub fn command(&self) -> Option<&Arc<Command>> {
        match self {
            Config::Running(c, _) => Some(c),
            Config::Abort => None,
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Config::Abort => f.write_str("abort"),
            Config::Running(c, st) => write!(f, "<{c} | {st}>"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionLabel {
    Assign,
    Lookup,
    LookupAbt,
    Mutation,
    MutationAbt,
    Free,
    FreeAbt,
    Alloc(i64),
    IfT,
    IfF,
    LoopT,
    LoopF,
    Div,
    Prob,
    Atomic,
    ConEnd,
    C1(Box<ActionLabel>),
    C2(Box<ActionLabel>),
}

impl ActionLabel {
    /// The thread an action belongs to at the outermost parallel composition.
    pub fn thread(&self) -> Option<u8> {
        match self {
            ActionLabel::C1(_) => Some(1),
            ActionLabel::C2(_) => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ActionLabel::Assign => "assign",
            ActionLabel::Lookup => "lookup",
            ActionLabel::LookupAbt => "lookup-abt",
            ActionLabel::Mutation => "mutation",
            ActionLabel::MutationAbt => "mutation-abt",
            ActionLabel::Free => "free",
            ActionLabel::FreeAbt => "free-abt",
            ActionLabel::Alloc(l) => return write!(f, "alloc({l})"),
            ActionLabel::IfT => "if-t",
            ActionLabel::IfF => "if-f",
            ActionLabel::LoopT => "loop-t",
            ActionLabel::LoopF => "loop-f",
            ActionLabel::Div => "div",
            ActionLabel::Prob => "prob",
            ActionLabel::Atomic => "atomic",
            ActionLabel::ConEnd => "con-end",
            ActionLabel::C1(a) => return write!(f, "C1({a})"),
            ActionLabel::C2(a) => return write!(f, "C2({a})"),
        };
        f.write_str(name)
    }
}

/// Successor configurations with positive probabilities summing to 1.
pub type TransitionDist = Vec<(Config, Rat)>;

/// Result of running a tame program to completion as one atomic step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicOutcome {
    /// Final configurations (`↓` states and abort) with their absorption mass.
    pub finals: Vec<(Config, Rat)>,
    pub p_div: Rat,
}

const DEFAULT_ATOMIC_NODE_CAP: usize = 200_000;

/// Computes enabled actions and transitions, caching atomic outcomes.
pub struct Stepper<'a> {
    bounds: &'a DomainBounds,
    atomic_node_cap: usize,
    atomic_cache: RefCell<HashMap<(Arc<Command>, ProgState), Arc<AtomicOutcome>>>,
}

impl<'a> Stepper<'a> {
    pub fn new(bounds: &'a DomainBounds) -> Self {
        Stepper { bounds, atomic_node_cap: DEFAULT_ATOMIC_NODE_CAP, atomic_cache: RefCell::default() }
    }

    pub fn bounds(&self) -> &DomainBounds {
        self.bounds
    }

    /// Every enabled action with its distribution, in a deterministic order.
    pub fn steps(&self, c: &Config) -> Result<Vec<(ActionLabel, TransitionDist)>> {
        match c {
            Config::Abort => Ok(Vec::new()),
            Config::Running(cmd, st) => self.steps_of(cmd, st),
        }
    }

    pub fn enabled_actions(&self, c: &Config) -> Result<Vec<ActionLabel>> {
        Ok(self.steps(c)?.into_iter().map(|(a, _)| a).collect())
    }

    pub fn transition(&self, c: &Config, a: &ActionLabel) -> Result<TransitionDist> {
        self.steps(c)?
            .into_iter()
            .find(|(b, _)| b == a)
            .map(|(_, d)| d)
            .ok_or_else(|| Error::ActionNotEnabled(format!("{a} at {c}")))
    }

    fn steps_of(&self, cmd: &Arc<Command>, st: &ProgState) -> Result<Vec<(ActionLabel, TransitionDist)>> {
        let s = &st.stack;
        let h = &st.heap;
        let done = |st: ProgState| Config::Running(Arc::new(Command::Terminated), st);
        let sure = |a: ActionLabel, c: Config| vec![(a, vec![(c, Rat::one())])];
        Ok(match &**cmd {
            Command::Terminated => Vec::new(),
            Command::Diverge => sure(ActionLabel::Div, Config::Running(cmd.clone(), st.clone())),
            Command::Assign(x, e) => {
                let v = eval_arith(e, s)?;
                sure(ActionLabel::Assign, done(ProgState::new(s.subst(x, v)?, h.clone())))
            }
            Command::Lookup(x, e) => {
                let loc = eval_arith(e, s)?;
                match h.get(loc) {
                    Some(v) => sure(ActionLabel::Lookup, done(ProgState::new(s.subst(x, v)?, h.clone()))),
                    None => sure(ActionLabel::LookupAbt, Config::Abort),
                }
            }
            Command::Mutate(e, e2) => {
                let loc = eval_arith(e, s)?;
                if h.contains(loc) {
                    let v = eval_arith(e2, s)?;
                    sure(ActionLabel::Mutation, done(ProgState::new(s.clone(), h.with(loc, v))))
                } else {
                    sure(ActionLabel::MutationAbt, Config::Abort)
                }
            }
            Command::Free(e) => {
                let loc = eval_arith(e, s)?;
                if h.contains(loc) {
                    sure(ActionLabel::Free, done(ProgState::new(s.clone(), h.without(loc))))
                } else {
                    sure(ActionLabel::FreeAbt, Config::Abort)
                }
            }
            Command::Alloc(x, es) => {
                let vals = es.iter().map(|e| eval_arith(e, s)).collect::<Result<Vec<_>>>()?;
                let mut out = Vec::new();
                for &l in &self.bounds.locations {
                    let fits = (0..vals.len() as i64).all(|i| {
                        self.bounds.locations.contains(&(l + i)) && !h.contains(l + i)
                    });
                    if fits {
                        let mut h2 = h.clone();
                        for (i, v) in vals.iter().enumerate() {
                            h2 = h2.with(l + i as i64, *v);
                        }
                        out.extend(sure(ActionLabel::Alloc(l), done(ProgState::new(s.subst(x, l)?, h2))));
                    }
                }
                out
            }
            Command::ProbChoice(c1, p, c2) => {
                let q = eval_prob(p, s)?;
                let left = Config::Running(c1.clone(), st.clone());
                let right = Config::Running(c2.clone(), st.clone());
                vec![(ActionLabel::Prob, merge(vec![(left, q.clone()), (right, Rat::one() - q)]))]
            }
            Command::Seq(c1, c2) => {
                if matches!(**c1, Command::Terminated) {
                    return self.steps_of(c2, st);
                }
                self.steps_of(c1, st)?
                    .into_iter()
                    .map(|(a, d)| {
                        let d = d
                            .into_iter()
                            .map(|(c, p)| match c {
                                Config::Running(c1b, st2) => {
                                    (Config::Running(Arc::new(Command::Seq(c1b, c2.clone())), st2), p)
                                }
                                Config::Abort => (Config::Abort, p),
                            })
                            .collect();
                        (a, d)
                    })
                    .collect()
            }
            Command::IfThenElse(g, c1, c2) => {
                if eval_guard(g, s)? {
                    sure(ActionLabel::IfT, Config::Running(c1.clone(), st.clone()))
                } else {
                    sure(ActionLabel::IfF, Config::Running(c2.clone(), st.clone()))
                }
            }
            Command::While(g, body) => {
                if eval_guard(g, s)? {
                    let unrolled = Command::Seq(body.clone(), cmd.clone());
                    sure(ActionLabel::LoopT, Config::Running(Arc::new(unrolled), st.clone()))
                } else {
                    sure(ActionLabel::LoopF, done(st.clone()))
                }
            }
            Command::Atomic(body) => {
                if !is_tame(body) {
                    return Ok(Vec::new());
                }
                let out = self.atomic_outcome_cached(body, st)?;
                let mut d = out.finals.clone();
                if !out.p_div.is_zero() {
                    d.push((Config::Running(Arc::new(Command::Diverge), st.clone()), out.p_div.clone()));
                }
                vec![(ActionLabel::Atomic, merge(d))]
            }
            Command::Concurrent(c1, c2) => {
                if matches!(**c1, Command::Terminated) && matches!(**c2, Command::Terminated) {
                    return Ok(sure(ActionLabel::ConEnd, done(st.clone())));
                }
                let mut out = Vec::new();
                for (a, d) in self.steps_of(c1, st)? {
                    let d = d
                        .into_iter()
                        .map(|(c, p)| match c {
                            Config::Running(c1b, st2) => {
                                (Config::Running(Arc::new(Command::Concurrent(c1b, c2.clone())), st2), p)
                            }
                            Config::Abort => (Config::Abort, p),
                        })
                        .collect();
                    out.push((ActionLabel::C1(Box::new(a)), d));
                }
                for (a, d) in self.steps_of(c2, st)? {
                    let d = d
                        .into_iter()
                        .map(|(c, p)| match c {
                            Config::Running(c2b, st2) => {
                                (Config::Running(Arc::new(Command::Concurrent(c1.clone(), c2b)), st2), p)
                            }
                            Config::Abort => (Config::Abort, p),
                        })
                        .collect();
                    out.push((ActionLabel::C2(Box::new(a)), d));
                }
                out
            }
        })
    }

    fn atomic_outcome_cached(&self, body: &Arc<Command>, st: &ProgState) -> Result<Arc<AtomicOutcome>> {
        let key = (body.clone(), st.clone());
        if let Some(hit) = self.atomic_cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let out = Arc::new(self.atomic_outcome(body, st)?);
        self.atomic_cache.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// Runs a tame program to absorption. Configurations that can never reach
    /// a final one, and stuck ones, make up the divergence mass.
    pub fn atomic_outcome(&self, body: &Arc<Command>, st: &ProgState) -> Result<AtomicOutcome> {
        if !is_tame(body) {
            return Err(Error::NotTame);
        }
        let start = Config::Running(body.clone(), st.clone());
        let mut index: HashMap<Config, usize> = HashMap::new();
        let mut nodes: Vec<Config> = Vec::new();
        let mut succ: Vec<Vec<(usize, Rat)>> = Vec::new();
        let mut queue = VecDeque::new();
        index.insert(start.clone(), 0);
        nodes.push(start);
        succ.push(Vec::new());
        queue.push_back(0);
        while let Some(i) = queue.pop_front() {
            let c = nodes[i].clone();
            if c.is_final() {
                continue;
            }
            let steps = self.steps(&c)?;
            debug_assert!(steps.len() <= 1, "tame programs resolve without scheduling");
            let Some((_, dist)) = steps.into_iter().next() else { continue };
            let mut out = Vec::with_capacity(dist.len());
            for (c2, p) in dist {
                let j = match index.get(&c2) {
                    Some(&j) => j,
                    None => {
                        if nodes.len() >= self.atomic_node_cap {
                            return Err(Error::StateSpaceExceeded(nodes.len()));
                        }
                        let j = nodes.len();
                        index.insert(c2.clone(), j);
                        nodes.push(c2);
                        succ.push(Vec::new());
                        queue.push_back(j);
                        j
                    }
                };
                out.push((j, p));
            }
            succ[i] = out;
        }
        let targets: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].is_final()).collect();
        let values = absorption(&succ, &targets);
        let mut finals = Vec::new();
        let mut total = Rat::zero();
        for (col, &t) in targets.iter().enumerate() {
            let p = values[0][col].clone();
            if !p.is_zero() {
                total += &p;
                finals.push((nodes[t].clone(), p));
            }
        }
        Ok(AtomicOutcome { finals, p_div: Rat::one() - total })
    }
}

/// Sums the probabilities of equal successors and drops zero entries.
fn merge(d: TransitionDist) -> TransitionDist {
    let mut out: TransitionDist = Vec::with_capacity(d.len());
    for (c, p) in d {
        if p.is_zero() {
            continue;
        }
        match out.iter_mut().find(|(c2, _)| *c2 == c) {
            Some((_, q)) => *q += p,
            None => out.push((c, p)),
        }
    }
    out
}

pub fn enabled_actions(c: &Config, bounds: &DomainBounds) -> Result<Vec<ActionLabel>> {
    Stepper::new(bounds).enabled_actions(c)
}

pub fn transition(c: &Config, a: &ActionLabel, bounds: &DomainBounds) -> Result<TransitionDist> {
    Stepper::new(bounds).transition(c, a)
}

pub fn atomic_outcome(c: &Command, st: &ProgState, bounds: &DomainBounds) -> Result<AtomicOutcome> {
    Stepper::new(bounds).atomic_outcome(&Arc::new(c.clone()), st)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// `↓` configuration.
    Terminated,
    Abort,
    /// Not expanded because the step cap was reached.
    Frontier,
    /// Non-final with no enabled action.
    Blocked,
    Internal,
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Number of BFS layers expanded from the roots.
    pub step_cap: usize,
    pub node_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { step_cap: 10_000, node_cap: 2_000_000 }
    }
}

/// The reachable fragment of the MDP as an explicit graph.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub nodes: Vec<Config>,
    pub index: HashMap<Config, usize>,
    pub kind: Vec<NodeKind>,
    pub actions: Vec<Vec<(ActionLabel, Vec<(usize, Rat)>)>>,
    pub roots: Vec<usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.kind.contains(&NodeKind::Frontier)
    }

    /// One line per transition `id action prob id'`.
    pub fn transitions_text(&self) -> String {
        let mut out = String::new();
        for (i, acts) in self.actions.iter().enumerate() {
            for (a, d) in acts {
                for (j, p) in d {
                    out.push_str(&format!("{i} {a} {} {j}\n", crate::syntax::fmt_rational(p)));
                }
            }
        }
        out
    }

    /// One line per node `id kind config`.
    pub fn nodes_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.nodes.iter().enumerate() {
            let kind = match self.kind[i] {
                NodeKind::Terminated => "final",
                NodeKind::Abort => "abort",
                NodeKind::Frontier => "frontier",
                NodeKind::Blocked => "blocked",
                NodeKind::Internal => "internal",
            };
            out.push_str(&format!("{i}\t{kind}\t{c}\n"));
        }
        out
    }
}

pub fn build_state_space(c0: &Command, st0: &ProgState, bounds: &DomainBounds, step_cap: usize) -> Result<StateSpace> {
    let limits = Limits { step_cap, ..Limits::default() };
    build_from(&Stepper::new(bounds), vec![Config::new(c0.clone(), st0.clone())], limits)
}

/// Breadth-first closure from several roots sharing one node table.
pub fn build_from(stepper: &Stepper, roots: Vec<Config>, limits: Limits) -> Result<StateSpace> {
    let mut space = StateSpace {
        nodes: Vec::new(),
        index: HashMap::new(),
        kind: Vec::new(),
        actions: Vec::new(),
        roots: Vec::new(),
    };
    let mut layer: Vec<usize> = Vec::new();
    for r in roots {
        let (i, fresh) = intern(&mut space, r, limits.node_cap)?;
        space.roots.push(i);
        if fresh {
            layer.push(i);
        }
    }
    let mut depth = 0;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for i in layer {
            let c = space.nodes[i].clone();
            if c.is_final() {
                space.kind[i] = if c == Config::Abort { NodeKind::Abort } else { NodeKind::Terminated };
                continue;
            }
            if depth >= limits.step_cap {
                space.kind[i] = NodeKind::Frontier;
                continue;
            }
            let steps = stepper.steps(&c)?;
            if steps.is_empty() {
                space.kind[i] = NodeKind::Blocked;
                continue;
            }
            let mut acts = Vec::with_capacity(steps.len());
            for (a, d) in steps {
                debug_assert_eq!(d.iter().map(|(_, p)| p.clone()).sum::<Rat>(), Rat::one());
                let mut out = Vec::with_capacity(d.len());
                for (c2, p) in d {
                    let (j, fresh) = intern(&mut space, c2, limits.node_cap)?;
                    if fresh {
                        next.push(j);
                    }
                    out.push((j, p));
                }
                acts.push((a, out));
            }
            space.kind[i] = NodeKind::Internal;
            space.actions[i] = acts;
        }
        layer = next;
        depth += 1;
    }
    Ok(space)
}

fn intern(space: &mut StateSpace, c: Config, cap: usize) -> Result<(usize, bool)> {
    if let Some(&i) = space.index.get(&c) {
        return Ok((i, false));
    }
    if space.nodes.len() >= cap {
        return Err(Error::StateSpaceExceeded(space.nodes.len()));
    }
    let i = space.nodes.len();
    space.index.insert(c.clone(), i);
    space.nodes.push(c);
    space.kind.push(NodeKind::Internal);
    space.actions.push(Vec::new());
    Ok((i, true))
}
