//! Monte Carlo runs under simple action-resolution policies. Randomised
//! policies are mixtures of deterministic schedulers, so their estimates of
//! the liberal value can only sit above the exact infimum; they are probes,
//! not semantics.

use std::fmt;

use num::{BigInt, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::expectation::{Evaluator, Expectation};
use crate::semantics::{ActionLabel, Config, Stepper, TransitionDist};
use crate::state::{DomainBounds, ProgState};
use crate::syntax::Command;
use crate::{rat_int, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Uniform choice among the enabled actions.
    UniformRandom(u64),
    /// The first enabled action whose label starts with the earliest listed
    /// prefix (`C1`, `C2(C1`, `prob`, ...); the first enabled action if none
    /// matches.
    FixedPriority(Vec<String>),
    /// Cycles through the threads that have an enabled action; ties inside a
    /// thread are broken at random.
    RoundRobinThreads(u64),
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::UniformRandom(s) => write!(f, "uniform({s})"),
            Policy::FixedPriority(order) => write!(f, "priority({})", order.join(",")),
            Policy::RoundRobinThreads(s) => write!(f, "round-robin({s})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunKind {
    Terminated(ProgState),
    Aborted,
    /// Step cap reached.
    Cutoff,
    /// Non-final configuration without an enabled action.
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub kind: RunKind,
    pub steps: usize,
}

impl RunOutcome {
    pub fn blocked(&self) -> bool {
        self.kind == RunKind::Blocked
    }
}

/// Nesting path of C1/C2 wrappers, identifying the thread an action runs in.
fn thread_path(a: &ActionLabel) -> Vec<u8> {
    let mut path = Vec::new();
    let mut cur = a;
    loop {
        match cur {
            ActionLabel::C1(inner) => {
                path.push(1);
                cur = inner;
            }
            ActionLabel::C2(inner) => {
                path.push(2);
                cur = inner;
            }
            _ => return path,
        }
    }
}

struct Chooser {
    policy: Policy,
    rng: ChaCha8Rng,
    last_thread: Option<Vec<u8>>,
}

impl Chooser {
    fn new(policy: &Policy, stream: u64) -> Self {
        let seed = match policy {
            Policy::UniformRandom(s) | Policy::RoundRobinThreads(s) => *s,
            Policy::FixedPriority(_) => 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Chooser { policy: policy.clone(), rng, last_thread: None }
    }

    fn pick(&mut self, actions: &[ActionLabel]) -> usize {
        match &self.policy {
            Policy::UniformRandom(_) => self.rng.random_range(0..actions.len()),
            Policy::FixedPriority(order) => {
                let labels: Vec<String> = actions.iter().map(|a| a.to_string()).collect();
                order
                    .iter()
                    .find_map(|prefix| labels.iter().position(|l| l.starts_with(prefix.as_str())))
                    .unwrap_or(0)
            }
            Policy::RoundRobinThreads(_) => {
                let mut threads: Vec<Vec<u8>> = actions.iter().map(thread_path).collect();
                threads.sort();
                threads.dedup();
                let next = match &self.last_thread {
                    Some(last) => threads.iter().find(|t| *t > last).unwrap_or(&threads[0]).clone(),
                    None => threads[0].clone(),
                };
                let mine: Vec<usize> = (0..actions.len()).filter(|&i| thread_path(&actions[i]) == next).collect();
                self.last_thread = Some(next);
                mine[self.rng.random_range(0..mine.len())]
            }
        }
    }
}

/// Samples a successor exactly: a uniform 64-bit dyadic against the
/// cumulative rational masses.
fn sample(dist: &TransitionDist, rng: &mut ChaCha8Rng) -> Config {
    let u = Rat::new(BigInt::from(rng.random::<u64>()), BigInt::from(u64::MAX) + 1);
    let mut acc = Rat::zero();
    for (c, p) in dist {
        acc += p;
        if u < acc {
            return c.clone();
        }
    }
    dist.last().expect("distributions are nonempty").0.clone()
}

fn run(
    stepper: &Stepper,
    c: &Command,
    st0: &ProgState,
    policy: &Policy,
    seed: u64,
    index: u64,
    step_cap: usize,
) -> Result<RunOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut chooser = Chooser::new(policy, index);
    let mut cfg = Config::new(c.clone(), st0.clone());
    for steps in 0..=step_cap {
        match &cfg {
            Config::Abort => return Ok(RunOutcome { kind: RunKind::Aborted, steps }),
            Config::Running(cmd, st) if matches!(**cmd, Command::Terminated) => {
                return Ok(RunOutcome { kind: RunKind::Terminated(st.clone()), steps });
            }
            _ => {}
        }
        if steps == step_cap {
            break;
        }
        let mut options = stepper.steps(&cfg)?;
        if options.is_empty() {
            return Ok(RunOutcome { kind: RunKind::Blocked, steps });
        }
        if let [(_, d)] = options.as_slice() {
            if let [(next, _)] = d.as_slice() {
                if *next == cfg {
                    // A sure self-loop never leaves; running on only burns steps.
                    return Ok(RunOutcome { kind: RunKind::Cutoff, steps: step_cap });
                }
            }
        }
        let labels: Vec<ActionLabel> = options.iter().map(|(a, _)| a.clone()).collect();
        let (_, dist) = options.swap_remove(chooser.pick(&labels));
        cfg = sample(&dist, &mut rng);
    }
    Ok(RunOutcome { kind: RunKind::Cutoff, steps: step_cap })
}

/// One trajectory; probabilistic branches and atomic regions are sampled
/// from their exact distributions with the generator seeded by `seed`.
pub fn sample_run(
    c: &Command,
    st0: &ProgState,
    policy: &Policy,
    seed: u64,
    step_cap: usize,
    bounds: &DomainBounds,
) -> Result<RunOutcome> {
    run(&Stepper::new(bounds), c, st0, policy, seed, 0, step_cap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub trials: usize,
    pub mean: Rat,
    pub stderr: f64,
    pub aborted: usize,
    pub cutoff: usize,
    pub blocked: usize,
}

impl Estimate {
    /// `trials mean stderr aborted% cutoff%`, tab separated.
    pub fn tsv(&self) -> String {
        let pct = |k: usize| 100.0 * k as f64 / self.trials.max(1) as f64;
        format!(
            "{}\t{:.6}\t{:.6}\t{:.2}\t{:.2}",
            self.trials,
            self.mean.to_f64().unwrap_or(f64::NAN),
            self.stderr,
            pct(self.aborted),
            pct(self.cutoff)
        )
    }
}

/// Mean score over `trials` runs: `X(final)` on termination, 0 on abort and
/// 1 on cutoff or a blocked configuration. Trial i uses stream i of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_liberal(
    c: &Command,
    post: &Expectation,
    st0: &ProgState,
    policy: &Policy,
    trials: usize,
    step_cap: usize,
    seed: u64,
    bounds: &DomainBounds,
) -> Result<Estimate> {
    let stepper = Stepper::new(bounds);
    let ev = Evaluator::new(bounds);
    let mut scores = Vec::with_capacity(trials);
    let (mut aborted, mut cutoff, mut blocked) = (0, 0, 0);
    for i in 0..trials {
        let out = run(&stepper, c, st0, policy, seed, i as u64, step_cap)?;
        let score = match &out.kind {
            RunKind::Terminated(st) => ev.eval_state(post, st)?,
            RunKind::Aborted => {
                aborted += 1;
                Rat::zero()
            }
            RunKind::Cutoff => {
                cutoff += 1;
                rat_int(1)
            }
            RunKind::Blocked => {
                blocked += 1;
                rat_int(1)
            }
        };
        scores.push(score);
    }
    let n = trials.max(1);
    let mean = scores.iter().sum::<Rat>() / rat_int(n as i64);
    let m = mean.to_f64().unwrap_or(0.0);
    let var = if trials > 1 {
        scores.iter().map(|s| (s.to_f64().unwrap_or(0.0) - m).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(Estimate { trials, mean, stderr: (var / n as f64).sqrt(), aborted, cutoff, blocked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::parse_expectation;
    use crate::rat;
    use crate::state::{Heap, Stack};
    use crate::syntax::parse_program;

    fn bounds() -> DomainBounds {
        DomainBounds::new(["x".into(), "y".into(), "r".into()], (-1, 1), [0], 1).unwrap()
    }

    fn empty() -> ProgState {
        ProgState::new(Stack::zeroed(&bounds().vars), Heap::default())
    }

    #[test]
    fn divergence_hits_the_cap_and_scores_one() {
        let b = bounds();
        let c = parse_program("diverge").unwrap();
        let out = sample_run(&c, &empty(), &Policy::UniformRandom(1), 1, 100, &b).unwrap();
        assert_eq!(out, RunOutcome { kind: RunKind::Cutoff, steps: 100 });
        let est = estimate_liberal(&c, &parse_expectation("0").unwrap(), &empty(), &Policy::UniformRandom(1), 20, 50, 3, &b)
            .unwrap();
        assert_eq!(est.mean, rat_int(1));
        assert_eq!(est.cutoff, 20);
    }

    #[test]
    fn unallocated_lookup_aborts_in_one_step() {
        let c = parse_program("x := <0>").unwrap();
        let out = sample_run(&c, &empty(), &Policy::UniformRandom(0), 0, 10, &bounds()).unwrap();
        assert_eq!(out, RunOutcome { kind: RunKind::Aborted, steps: 1 });
    }

    #[test]
    fn jones_terminates_in_zero_or_one() {
        let c = parse_program("{ x := 0 } [1/2] { x := 1 }").unwrap();
        for seed in 0..10 {
            let out = sample_run(&c, &empty(), &Policy::UniformRandom(seed), seed, 100, &bounds()).unwrap();
            let RunKind::Terminated(st) = out.kind else { panic!("{out:?}") };
            assert!([0, 1].contains(&st.stack.get(&"x".into()).unwrap()));
        }
    }

    #[test]
    fn fair_coin_estimate_concentrates() {
        let c = parse_program("{ x := 0 } [1/2] { x := 1 }").unwrap();
        let post = parse_expectation("[x = 0]").unwrap();
        let est = estimate_liberal(&c, &post, &empty(), &Policy::UniformRandom(7), 10_000, 100, 7, &bounds()).unwrap();
        assert!((est.mean.to_f64().unwrap() - 0.5).abs() < 0.02, "{est:?}");
        assert!(est.stderr > 0.0 && est.stderr < 0.01);
    }

    #[test]
    fn same_seed_same_statistics() {
        let c = parse_program("{ {x := 0} [1/3] {x := 1} } ||| { y := 1 }").unwrap();
        let post = parse_expectation("[x = 0]").unwrap();
        for policy in [Policy::UniformRandom(4), Policy::RoundRobinThreads(4), Policy::FixedPriority(vec!["C2".into()])] {
            let a = estimate_liberal(&c, &post, &empty(), &policy, 300, 100, 11, &bounds()).unwrap();
            let b = estimate_liberal(&c, &post, &empty(), &policy, 300, 100, 11, &bounds()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.tsv(), b.tsv());
        }
    }

    #[test]
    fn priority_prefers_listed_thread() {
        let c = parse_program("{ x := 1 } ||| { x := 0 }").unwrap();
        let out = sample_run(&c, &empty(), &Policy::FixedPriority(vec!["C2".into()]), 0, 10, &bounds()).unwrap();
        // Thread 2 runs first, thread 1 overwrites.
        let RunKind::Terminated(st) = out.kind else { panic!() };
        assert_eq!(st.stack.get(&"x".into()).unwrap(), 1);
    }

    #[test]
    fn round_robin_alternates_threads() {
        let mut ch = Chooser::new(&Policy::RoundRobinThreads(0), 0);
        let acts = vec![ActionLabel::C1(Box::new(ActionLabel::Assign)), ActionLabel::C2(Box::new(ActionLabel::Assign))];
        let picks: Vec<usize> = (0..4).map(|_| ch.pick(&acts)).collect();
        assert_eq!(picks, vec![0, 1, 0, 1]);
    }

    #[test]
    fn exact_sampler_respects_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = vec![(Config::Abort, rat(1, 4)), (Config::new(Command::Terminated, empty()), rat(3, 4))];
        let hits = (0..4000).filter(|_| sample(&d, &mut rng) == Config::Abort).count();
        assert!((900..1100).contains(&hits), "{hits}");
    }
}
