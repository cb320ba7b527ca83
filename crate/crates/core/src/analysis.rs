//! Weakest liberal preexpectations on the bounded MDP: the step operator,
//! the resource-safe iterates wslp_n, two-sided brackets for wlp, a
//! qualitative almost-sure-termination check and exact values of fixed
//! memoryless schedulers.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use num::{One, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::absorb::expected_weights;
use crate::error::{Error, Result};
use crate::expectation::{Evaluator, Expectation, Predicate};
use crate::semantics::{build_from, ActionLabel, Config, Limits, NodeKind, StateSpace, Stepper};
use crate::state::{enumerate_stacks, DomainBounds, ProgState};
use crate::syntax::{free_vars_cmd, Command};
use crate::Rat;

/// Values of a table at a list of states.
pub type ValueTable = Vec<(ProgState, Rat)>;

/// One step of the MDP under the demonic scheduler: the minimum over enabled
/// actions of the expected value of `t`, and 1 without enabled actions.
pub fn step_op(t: impl Fn(&Config) -> Result<Rat>, c: &Config, stepper: &Stepper) -> Result<Rat> {
    let mut best: Option<Rat> = None;
    for (_, dist) in stepper.steps(c)? {
        let mut v = Rat::zero();
        for (c2, p) in &dist {
            v += p * t(c2)?;
        }
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    }
    Ok(best.unwrap_or_else(Rat::one))
}

/// Memoised evaluation of wslp_n⟦C⟧(X | I).
pub struct Wslp<'a> {
    stepper: Stepper<'a>,
    ev: Evaluator<'a>,
    post: Expectation,
    inv: Expectation,
    trivial_inv: bool,
    memo: RefCell<HashMap<(usize, Config), Rat>>,
}

impl<'a> Wslp<'a> {
    pub fn new(post: Expectation, inv: Expectation, bounds: &'a DomainBounds) -> Result<Self> {
        let trivial_inv = inv == Expectation::Iverson(Predicate::Emp);
        let ev = Evaluator::new(bounds);
        if !trivial_inv && !crate::expectation::is_qualitative(&inv, bounds)? {
            return Err(Error::NonQualitative(inv.to_string()));
        }
        Ok(Wslp { stepper: Stepper::new(bounds), ev, post, inv, trivial_inv, memo: RefCell::default() })
    }

    pub fn value(&self, n: usize, cmd: &Arc<Command>, st: &ProgState) -> Result<Rat> {
        if n == 0 {
            return Ok(Rat::one());
        }
        if matches!(**cmd, Command::Terminated) {
            return self.ev.eval_state(&self.post, st);
        }
        let key = (n, Config::Running(cmd.clone(), st.clone()));
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = if self.trivial_inv {
            step_op(|c| self.successor(n - 1, c), &key.1, &self.stepper)?
        } else {
            let mut best = Rat::one();
            for ext in self.ev.guard_extensions(&self.inv, &st.stack, &st.heap)? {
                let joined = ProgState::new(st.stack.clone(), st.heap.union(&ext)?);
                let here = Config::Running(cmd.clone(), joined);
                let v = step_op(|c| self.successor(n - 1, c), &here, &self.stepper)?;
                if v < best {
                    best = v;
                }
            }
            best
        };
        self.memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// wslp_{n} ⋆ I at a successor configuration; abort is worth 0.
    fn successor(&self, n: usize, c: &Config) -> Result<Rat> {
        let Config::Running(cmd, st) = c else { return Ok(Rat::zero()) };
        if self.trivial_inv {
            return self.value(n, cmd, st);
        }
        let mut best = Rat::zero();
        for shared in self.ev.guard_subheaps(&self.inv, &st.stack, &st.heap)? {
            let own = ProgState::new(st.stack.clone(), shared.remainder_in(&st.heap));
            let v = self.value(n, cmd, &own)?;
            if v > best {
                best = v;
            }
        }
        Ok(best)
    }
}

/// wslp_n⟦c⟧(X | I) at each of the given initial states.
pub fn wslp_n(
    c: &Command,
    post: &Expectation,
    inv: &Expectation,
    bounds: &DomainBounds,
    n: usize,
    states: &[ProgState],
) -> Result<ValueTable> {
    let engine = Wslp::new(post.clone(), inv.clone(), bounds)?;
    let cmd = Arc::new(c.clone());
    states.iter().map(|st| Ok((st.clone(), engine.value(n, &cmd, st)?))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bracket {
    pub lower: Rat,
    pub upper: Rat,
}

impl Bracket {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn width(&self) -> Rat {
        &self.upper - &self.lower
    }
}

#[derive(Clone, Debug)]
pub struct BracketReport {
    pub state: ProgState,
    pub bracket: Bracket,
    pub iterations: usize,
    /// The width reached epsilon before the iteration limit.
    pub converged: bool,
    /// Some reachable configuration lies beyond the step cap.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct BracketOptions {
    pub eps: Rat,
    pub n_max: usize,
    pub limits: Limits,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions { eps: Rat::new(1.into(), 1_000_000.into()), n_max: 10_000, limits: Limits::default() }
    }
}

pub fn wlp_bracket(
    c: &Command,
    post: &Expectation,
    st0: &ProgState,
    bounds: &DomainBounds,
    opts: &BracketOptions,
) -> Result<BracketReport> {
    let mut out = wlp_brackets(c, post, std::slice::from_ref(st0), bounds, opts)?;
    Ok(out.remove(0))
}

/// Brackets for several initial states over one shared state space. The
/// upper side is the wslp_n iteration with I = [emp]; the lower side is one
/// minus an interval iteration from above on the maximal expected loss,
/// run on the quotient by maximal end components.
pub fn wlp_brackets(
    c: &Command,
    post: &Expectation,
    states: &[ProgState],
    bounds: &DomainBounds,
    opts: &BracketOptions,
) -> Result<Vec<BracketReport>> {
    let stepper = Stepper::new(bounds);
    let cmd = Arc::new(c.clone());
    let roots = states.iter().map(|st| Config::Running(cmd.clone(), st.clone())).collect();
    let space = build_from(&stepper, roots, opts.limits)?;
    let ev = Evaluator::new(bounds);
    let n = space.len();

    let mut post_value = vec![Rat::zero(); n];
    for i in 0..n {
        if space.kind[i] == NodeKind::Terminated {
            post_value[i] = ev.eval_state(post, space.nodes[i].state().expect("running"))?;
        }
    }

    let quotient = Quotient::new(&space, &post_value);
    // Terminal values are in place from the start, so after k sweeps the
    // upper side at internal nodes equals wslp_{k+1}.
    let mut upper = upper_sweep(&space, &post_value, &vec![Rat::one(); n]);
    let mut loss = quotient.initial();
    let gap_ok = |upper: &[Rat], loss: &[Rat]| {
        space.roots.iter().all(|&r| &upper[r] - (Rat::one() - &loss[quotient.class[r]]) <= opts.eps)
    };

    let mut iterations = 0;
    let mut converged = gap_ok(&upper, &loss);
    while !converged && iterations < opts.n_max {
        let next_upper = upper_sweep(&space, &post_value, &upper);
        let next_loss = quotient.sweep(&loss);
        iterations += 1;
        let stable = next_upper == upper && next_loss == loss;
        upper = next_upper;
        loss = next_loss;
        converged = gap_ok(&upper, &loss);
        if stable {
            break;
        }
    }

    let truncated = space.truncated();
    Ok(space
        .roots
        .iter()
        .zip(states)
        .map(|(&r, st)| BracketReport {
            state: st.clone(),
            bracket: Bracket { lower: Rat::one() - &loss[quotient.class[r]], upper: upper[r].clone() },
            iterations,
            converged,
            truncated,
        })
        .collect())
}

fn upper_sweep(space: &StateSpace, post_value: &[Rat], prev: &[Rat]) -> Vec<Rat> {
    (0..space.len())
        .map(|i| match space.kind[i] {
            NodeKind::Terminated => post_value[i].clone(),
            NodeKind::Abort => Rat::zero(),
            NodeKind::Frontier | NodeKind::Blocked => Rat::one(),
            NodeKind::Internal => space.actions[i]
                .iter()
                .map(|(_, d)| d.iter().map(|(j, p)| p * &prev[*j]).sum::<Rat>())
                .min()
                .unwrap_or_else(Rat::one),
        })
        .collect()
}

/// The MDP with every maximal end component collapsed to one node that may
/// also stop with loss 0, on which iteration from above converges to the
/// least fixpoint.
struct Quotient {
    class: Vec<usize>,
    /// Fixed loss for terminal classes and classes that cannot lose.
    fixed: Vec<Option<Rat>>,
    stay: Vec<bool>,
    actions: Vec<Vec<Vec<(usize, Rat)>>>,
}

impl Quotient {
    fn new(space: &StateSpace, post_value: &[Rat]) -> Self {
        let n = space.len();
        let terminal_loss = |i: usize| -> Option<Rat> {
            match space.kind[i] {
                NodeKind::Terminated => Some(Rat::one() - &post_value[i]),
                NodeKind::Abort | NodeKind::Frontier => Some(Rat::one()),
                NodeKind::Blocked => Some(Rat::zero()),
                NodeKind::Internal => None,
            }
        };

        let (class_of_node, num_classes, mec_class) = collapse_mecs(space);

        // Nodes that cannot reach a positive loss under any choices.
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, acts) in space.actions.iter().enumerate() {
            for (_, d) in acts {
                for (j, _) in d {
                    preds[*j].push(i);
                }
            }
        }
        let mut can_lose = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for i in 0..n {
            if terminal_loss(i).is_some_and(|l| !l.is_zero()) {
                can_lose[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &preds[j] {
                if !can_lose[i] && space.kind[i] == NodeKind::Internal {
                    can_lose[i] = true;
                    queue.push_back(i);
                }
            }
        }

        let mut fixed: Vec<Option<Rat>> = vec![None; num_classes];
        let mut stay = vec![false; num_classes];
        let mut actions: Vec<Vec<Vec<(usize, Rat)>>> = vec![Vec::new(); num_classes];
        let mut class_can_lose = vec![false; num_classes];
        for i in 0..n {
            let q = class_of_node[i];
            class_can_lose[q] |= can_lose[i];
            if let Some(l) = terminal_loss(i) {
                fixed[q] = Some(l);
                continue;
            }
            if mec_class[q] {
                stay[q] = true;
            }
            for (_, d) in &space.actions[i] {
                if d.iter().all(|(j, _)| class_of_node[*j] == q) {
                    continue;
                }
                let mut merged: Vec<(usize, Rat)> = Vec::with_capacity(d.len());
                for (j, p) in d {
                    let cj = class_of_node[*j];
                    match merged.iter_mut().find(|(c, _)| *c == cj) {
                        Some((_, acc)) => *acc += p,
                        None => merged.push((cj, p.clone())),
                    }
                }
                actions[q].push(merged);
            }
        }
        for q in 0..num_classes {
            if fixed[q].is_none() && !class_can_lose[q] {
                fixed[q] = Some(Rat::zero());
            }
        }
        Quotient { class: class_of_node, fixed, stay, actions }
    }

    fn initial(&self) -> Vec<Rat> {
        self.fixed.iter().map(|f| f.clone().unwrap_or_else(Rat::one)).collect()
    }

    fn sweep(&self, prev: &[Rat]) -> Vec<Rat> {
        (0..prev.len())
            .map(|q| {
                if let Some(l) = &self.fixed[q] {
                    return l.clone();
                }
                let best = self.actions[q].iter().map(|d| d.iter().map(|(j, p)| p * &prev[*j]).sum::<Rat>()).max();
                match (best, self.stay[q]) {
                    (Some(b), _) => b.max(Rat::zero()),
                    (None, true) => Rat::zero(),
                    // Unreachable: internal nodes outside end components always have a leaving action.
                    (None, false) => Rat::one(),
                }
            })
            .collect()
    }
}

/// Class index per node, the class count, and whether each class is an end
/// component. Internal nodes of one maximal end component share a class;
/// every other node is its own class.
fn collapse_mecs(space: &StateSpace) -> (Vec<usize>, usize, Vec<bool>) {
    let n = space.len();
    let mut alive: Vec<bool> = (0..n).map(|i| space.kind[i] == NodeKind::Internal).collect();
    let mut allowed: Vec<Vec<bool>> = space.actions.iter().map(|a| vec![true; a.len()]).collect();
    let mut scc_id = vec![usize::MAX; n];
    loop {
        let mut graph: DiGraph<usize, ()> = DiGraph::with_capacity(n, 0);
        let idx: Vec<_> = (0..n).map(|i| graph.add_node(i)).collect();
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (k, (_, d)) in space.actions[i].iter().enumerate() {
                if allowed[i][k] {
                    for (j, _) in d {
                        if alive[*j] {
                            graph.add_edge(idx[i], idx[*j], ());
                        }
                    }
                }
            }
        }
        for (c, comp) in tarjan_scc(&graph).into_iter().enumerate() {
            for v in comp {
                scc_id[graph[v]] = c;
            }
        }
        let mut changed = false;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (k, (_, d)) in space.actions[i].iter().enumerate() {
                if allowed[i][k] && d.iter().any(|(j, _)| !alive[*j] || scc_id[*j] != scc_id[i]) {
                    allowed[i][k] = false;
                    changed = true;
                }
            }
            if !allowed[i].iter().any(|a| *a) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut class = vec![usize::MAX; n];
    let mut mec_class = Vec::new();
    let mut by_scc: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        if alive[i] {
            let next = mec_class.len();
            let q = *by_scc.entry(scc_id[i]).or_insert(next);
            if q == next {
                mec_class.push(true);
            }
            class[i] = q;
        } else {
            class[i] = mec_class.len();
            mec_class.push(false);
        }
    }
    let count = mec_class.len();
    (class, count, mec_class)
}

/// Initial states for whole-domain questions: stacks over the program's
/// variables times every heap of the universe.
pub fn initial_states(c: &Command, bounds: &DomainBounds) -> Vec<ProgState> {
    let ev = Evaluator::new(bounds);
    let vars: BTreeSet<_> = free_vars_cmd(c);
    let mut out = Vec::new();
    for s in enumerate_stacks(&vars, bounds) {
        for h in ev.universe() {
            out.push(ProgState::new(s.clone(), h.clone()));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct AstReport {
    pub ast: bool,
    /// Reachable configurations from which some scheduler avoids every final
    /// configuration surely.
    pub witness: Vec<Config>,
    /// Some configuration lies beyond the step cap and was assumed to avoid
    /// termination.
    pub truncated: bool,
}

/// Almost-sure termination under every scheduler from every initial state of
/// the bounded domain.
pub fn check_ast(c: &Command, bounds: &DomainBounds, limits: Limits) -> Result<AstReport> {
    check_ast_from(c, &initial_states(c, bounds), bounds, limits)
}

/// Termination has probability 1 under every scheduler iff no reachable
/// configuration has a scheduler that surely avoids final configurations.
pub fn check_ast_from(c: &Command, states: &[ProgState], bounds: &DomainBounds, limits: Limits) -> Result<AstReport> {
    let stepper = Stepper::new(bounds);
    let cmd = Arc::new(c.clone());
    let roots = states.iter().map(|st| Config::Running(cmd.clone(), st.clone())).collect();
    let space = build_from(&stepper, roots, limits)?;
    let n = space.len();
    let mut avoid: Vec<bool> = (0..n).map(|i| space.kind[i] != NodeKind::Terminated && space.kind[i] != NodeKind::Abort).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            if avoid[i] && space.kind[i] == NodeKind::Internal {
                let keeps = space.actions[i].iter().any(|(_, d)| d.iter().all(|(j, _)| avoid[*j]));
                if !keeps {
                    avoid[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let witness: Vec<Config> = (0..n).filter(|&i| avoid[i]).map(|i| space.nodes[i].clone()).collect();
    Ok(AstReport { ast: witness.is_empty(), witness, truncated: space.truncated() })
}

/// Exact liberal value of the Markov chain induced by a memoryless policy:
/// expected post value at `↓` plus the probability of never terminating.
pub fn scheduler_value(
    c: &Command,
    post: &Expectation,
    st0: &ProgState,
    bounds: &DomainBounds,
    policy: &dyn Fn(&Config, &[ActionLabel]) -> usize,
    limits: Limits,
) -> Result<Rat> {
    let stepper = Stepper::new(bounds);
    let space = build_from(&stepper, vec![Config::new(c.clone(), st0.clone())], limits)?;
    let ev = Evaluator::new(bounds);
    let mut succ: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); space.len()];
    let mut terminals: Vec<(usize, Vec<Rat>)> = Vec::new();
    for i in 0..space.len() {
        match space.kind[i] {
            NodeKind::Terminated => {
                let x = ev.eval_state(post, space.nodes[i].state().expect("running"))?;
                terminals.push((i, vec![x, Rat::one()]));
            }
            NodeKind::Abort => terminals.push((i, vec![Rat::zero(), Rat::one()])),
            NodeKind::Internal => {
                let labels: Vec<ActionLabel> = space.actions[i].iter().map(|(a, _)| a.clone()).collect();
                let k = policy(&space.nodes[i], &labels);
                let (_, d) = space.actions[i]
                    .get(k)
                    .ok_or_else(|| Error::ActionNotEnabled(format!("choice {k} at {}", space.nodes[i])))?;
                succ[i] = d.clone();
            }
            NodeKind::Frontier | NodeKind::Blocked => {}
        }
    }
    let values = expected_weights(&succ, &terminals, 2);
    let root = &values[space.roots[0]];
    Ok(&root[0] + (Rat::one() - &root[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::parse_expectation;
    use crate::state::{Heap, Stack};
    use crate::syntax::parse_program;
    use crate::{rat, rat_int};

    fn bounds() -> DomainBounds {
        DomainBounds::new(["r".into(), "x".into(), "y".into()], (-1, 1), [0], 1).unwrap()
    }

    fn running() -> Command {
        parse_program(
            "<r> := -1; { {<r> := 0} [1/2] {<r> := 1} } ||| { y := <r>; while (y = -1) { y := <r> } }",
        )
        .unwrap()
    }

    fn st(pairs: &[(&str, i64)], cells: &[(i64, i64)]) -> ProgState {
        let mut s = Stack::zeroed(&bounds().vars);
        for (x, v) in pairs {
            s.set(&(*x).into(), *v);
        }
        ProgState::new(s, Heap::from_cells(cells.iter().copied()))
    }

    fn exp(src: &str) -> Expectation {
        parse_expectation(src).unwrap()
    }

    #[test]
    fn step_of_final_config_is_one() {
        let b = bounds();
        let stepper = Stepper::new(&b);
        let c = Config::new(Command::Terminated, st(&[], &[]));
        assert_eq!(step_op(|_| Ok(rat_int(0)), &c, &stepper).unwrap(), rat_int(1));
        let d = Config::new(Command::Diverge, st(&[], &[]));
        assert_eq!(step_op(|_| Ok(rat(1, 3)), &d, &stepper).unwrap(), rat(1, 3));
    }

    #[test]
    fn step_takes_the_least_thread_choice() {
        let b = bounds();
        let stepper = Stepper::new(&b);
        let c = Config::new(parse_program("{x := 0} ||| {x := 1}").unwrap(), st(&[], &[]));
        let t = |c: &Config| {
            let x = c.state().unwrap().stack.get(&"x".into())?;
            Ok(if x == 0 { rat(3, 10) } else { rat(7, 10) })
        };
        assert_eq!(step_op(t, &c, &stepper).unwrap(), rat(3, 10));
    }

    #[test]
    fn jones_is_exact_after_two_iterations() {
        let b = bounds();
        let c = parse_program("{x := 0} [1/2] {x := 1}").unwrap();
        for post in ["[x = 0]", "[x = 1]"] {
            let rep = wlp_bracket(&c, &exp(post), &st(&[], &[]), &b, &BracketOptions::default()).unwrap();
            assert_eq!(rep.bracket, Bracket { lower: rat(1, 2), upper: rat(1, 2) });
            assert_eq!(rep.iterations, 2);
        }
    }

    #[test]
    fn divergence_has_liberal_value_one() {
        let rep = wlp_bracket(&Command::Diverge, &exp("0"), &st(&[], &[]), &bounds(), &BracketOptions::default())
            .unwrap();
        assert!(rep.bracket.is_exact());
        assert_eq!(rep.bracket.upper, rat_int(1));
    }

    #[test]
    fn running_example_is_one_half_when_r_is_allocated() {
        let b = bounds();
        let opts = BracketOptions::default();
        let rep = wlp_bracket(&running(), &exp("[y = 0]"), &st(&[("r", 0)], &[(0, -1)]), &b, &opts).unwrap();
        assert_eq!(rep.bracket, Bracket { lower: rat(1, 2), upper: rat(1, 2) });
        let rep = wlp_bracket(&running(), &exp("[y = 0]"), &st(&[("r", 0)], &[]), &b, &opts).unwrap();
        assert_eq!(rep.bracket, Bracket { lower: rat_int(0), upper: rat_int(0) });
    }

    #[test]
    fn wslp_iterates_match_the_bracket_upper_side() {
        let b = bounds();
        let c = parse_program("{x := 0} [1/2] {x := 1}; y := x").unwrap();
        let post = exp("[y = 0]");
        let s0 = st(&[], &[]);
        let emp = Expectation::emp();
        assert_eq!(wslp_n(&c, &post, &emp, &b, 0, &[s0.clone()]).unwrap()[0].1, rat_int(1));
        assert_eq!(wslp_n(&c, &post, &emp, &b, 10, &[s0.clone()]).unwrap()[0].1, rat(1, 2));
        assert_eq!(wslp_n(&Command::Diverge, &post, &emp, &b, 7, &[s0]).unwrap()[0].1, rat_int(1));
    }

    #[test]
    fn resource_invariant_threads_through_steps() {
        // With I = r ↦ 0 or r ↦ -1 owned by the invariant, the thread itself
        // holds no heap, and the lookup reads the shared cell.
        let b = bounds();
        let inv = exp("max([r |-> 0], [r |-> -1])");
        let c = parse_program("atomic { y := <r> }").unwrap();
        let post = exp("[y = 0] + [y = -1]");
        let t = wslp_n(&c, &post, &inv, &b, 3, &[st(&[("r", 0)], &[])]).unwrap();
        assert_eq!(t[0].1, rat_int(1));
        let post0 = exp("[y = 0]");
        let t = wslp_n(&c, &post0, &inv, &b, 3, &[st(&[("r", 0)], &[])]).unwrap();
        assert_eq!(t[0].1, rat_int(0));
    }

    #[test]
    fn non_qualitative_invariant_is_rejected() {
        let err = wslp_n(&Command::Terminated, &exp("1"), &exp("1/2"), &bounds(), 1, &[st(&[], &[])]);
        assert!(matches!(err, Err(Error::NonQualitative(_))));
    }

    #[test]
    fn ast_examples() {
        let b = bounds();
        let jones = parse_program("{x := 0} [1/2] {x := 1}").unwrap();
        assert!(check_ast(&jones, &b, Limits::default()).unwrap().ast);
        assert!(!check_ast(&Command::Diverge, &b, Limits::default()).unwrap().ast);
        let rep = check_ast(&running(), &b, Limits::default()).unwrap();
        assert!(!rep.ast);
        assert!(!rep.witness.is_empty());
    }

    #[test]
    fn scheduler_values_on_the_running_example() {
        let b = bounds();
        let s0 = st(&[("r", 0)], &[(0, -1)]);
        let post = exp("[y = 0]");
        let starve_first = |_: &Config, acts: &[ActionLabel]| {
            acts.iter().position(|a| a.thread() == Some(2)).unwrap_or(0)
        };
        let v = scheduler_value(&running(), &post, &s0, &b, &starve_first, Limits::default()).unwrap();
        assert_eq!(v, rat_int(1));
        let first_thread = |_: &Config, acts: &[ActionLabel]| {
            acts.iter().position(|a| a.thread() == Some(1)).unwrap_or(0)
        };
        let v = scheduler_value(&running(), &post, &s0, &b, &first_thread, Limits::default()).unwrap();
        assert_eq!(v, rat(1, 2));
        let jones = parse_program("{x := 0} [1/2] {x := 1}").unwrap();
        let v = scheduler_value(&jones, &exp("[x = 0]"), &s0, &b, &|_, _| 0, Limits::default()).unwrap();
        assert_eq!(v, rat(1, 2));
    }

    #[test]
    fn geometric_loop_brackets_converge() {
        let b = bounds();
        let c = parse_program("x := 1; while (x = 1) { {x := 0} [1/2] {x := 1} }").unwrap();
        let rep = wlp_bracket(&c, &exp("[x = 0]"), &st(&[], &[]), &b, &BracketOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.bracket.lower <= rat_int(1) && rep.bracket.upper >= rat_int(1));
        assert!(rep.bracket.width() <= rat(1, 1_000_000));
    }

    #[test]
    fn frontier_widens_the_bracket() {
        let b = bounds();
        let c = parse_program("x := 1; x := 0; y := 1").unwrap();
        let opts = BracketOptions { limits: Limits { step_cap: 1, ..Limits::default() }, ..BracketOptions::default() };
        let rep = wlp_bracket(&c, &exp("[x = 0]"), &st(&[], &[]), &b, &opts).unwrap();
        assert!(rep.truncated);
        assert_eq!(rep.bracket, Bracket { lower: rat_int(0), upper: rat_int(1) });
    }
}
