use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chp_core::analysis::{check_ast_from, initial_states, wlp_brackets, wslp_n, BracketOptions};
use chp_core::expectation::{parse_expectation, Evaluator};
use chp_core::proofcheck::{check, load_proof, CheckError, ProofNode};
use chp_core::semantics::{build_from, Limits, Stepper};
use chp_core::simulate::{estimate_liberal, Policy};
use chp_core::state::parse_initial_state;
use chp_core::syntax::{free_vars_cmd, is_tame, parse_program, Parser as TextParser};
use chp_core::{Command, Config, DomainBounds, Error, Expectation, ProgState, Rat, VarName};
use num::{BigInt, One, Signed, Zero};

#[derive(Parser)]
#[command(name = "chp", version, about = "Analyse concurrent probabilistic heap programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct BoundsArgs {
    /// Value range, e.g. `-1..1` (inclusive).
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    /// Allocatable locations, e.g. `0,1,2`.
    #[arg(long, allow_hyphen_values = true)]
    locs: String,
    #[arg(long)]
    heap_cap: usize,
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Maximal bracket width, e.g. `1/1000000`.
    #[arg(long, default_value = "1/1000000")]
    epsilon: String,
    /// Exploration depth and iteration budget.
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 2_000_000)]
    node_cap: usize,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Report {
    Summary,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Uniform,
    Priority,
    RoundRobin,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and print it back.
    Parse {
        program: PathBuf,
        /// Print the syntax tree instead of the program text.
        #[arg(long)]
        tree: bool,
    },
    /// Evaluate an expectation at a state, or at every state of the domain.
    Eval {
        expectation: PathBuf,
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Bracket wlp(C, X) from above and below.
    Wlp {
        program: PathBuf,
        post: PathBuf,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "summary")]
        report: Report,
        #[command(flatten)]
        bounds: BoundsArgs,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// The n-th resource-safe liberal iterate wslp_n(C, X | I).
    Wrlp {
        program: PathBuf,
        post: PathBuf,
        /// Resource invariant (an expectation file); `emp` if omitted.
        #[arg(long)]
        inv: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Check a proof script.
    Check {
        proof: PathBuf,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Estimate the liberal value by sampling runs.
    Simulate {
        program: PathBuf,
        post: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long, value_enum, default_value = "uniform")]
        policy: PolicyKind,
        /// Label prefixes for the priority policy, highest first.
        #[arg(long, value_delimiter = ',')]
        priority: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[command(flatten)]
        bounds: BoundsArgs,
    },
    /// Decide almost-sure termination under every scheduler.
    Ast {
        program: PathBuf,
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 2_000_000)]
        node_cap: usize,
    },
    /// Dump the reachable MDP: transitions on stdout, configurations in a table.
    EmitMdp {
        program: PathBuf,
        #[arg(long)]
        init: PathBuf,
        /// Where to write the id-to-configuration table; stdout if omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundsArgs,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 2_000_000)]
        node_cap: usize,
    },
}

enum Failure {
    /// Bad input: exit code 2.
    Input(String),
    /// Verification or evaluation failed: exit code 1.
    Semantic(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::Input(_)
            | Error::Bounds(_)
            | Error::Undeclared(_)
            | Error::Overlap(_)
            | Error::HeapOutOfBounds(_) => Failure::Input(e.to_string()),
            _ => Failure::Semantic(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T, Error>) -> Result<T, Failure> {
    r.map_err(|e| match Failure::from(e) {
        Failure::Input(m) => Failure::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn load_program(path: &Path) -> Result<Command, Failure> {
    let c = in_file(path, parse_program(&read(path)?))?;
    lint(&c);
    Ok(c)
}

fn load_exp(path: &Path) -> Result<Expectation, Failure> {
    in_file(path, parse_expectation(&read(path)?))
}

fn load_state(path: &Path) -> Result<ProgState, Failure> {
    in_file(path, parse_initial_state(&read(path)?))
}

/// Non-tame atomic regions have no transition and block.
fn lint(c: &Command) {
    if let Command::Atomic(body) = c {
        if !is_tame(body) {
            eprintln!("warning: atomic region is not tame and will block: {c}");
        }
    }
    for child in c.children() {
        lint(child);
    }
}

fn parse_range(text: &str) -> Result<(i64, i64), Failure> {
    let bad = || Failure::Input(format!("--values expects LO..HI, got `{text}`"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn parse_locs(text: &str) -> Result<Vec<i64>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| Failure::Input(format!("--locs expects integers, got `{s}`"))))
        .collect()
}

fn parse_rat(flag: &str, text: &str) -> Result<Rat, Failure> {
    let parsed = TextParser::new(text).and_then(|mut p| {
        let q = p.rational()?;
        p.expect_eof()?;
        Ok(q)
    });
    parsed.map_err(|e| Failure::Input(format!("{flag}: {e}")))
}

fn bounds(args: &BoundsArgs, vars: BTreeSet<VarName>) -> Result<DomainBounds, Failure> {
    Ok(DomainBounds::new(vars, parse_range(&args.values)?, parse_locs(&args.locs)?, args.heap_cap)?)
}

fn limits(max_steps: usize, node_cap: usize) -> Result<Limits, Failure> {
    if max_steps == 0 || node_cap == 0 {
        return Err(Failure::Input("caps must be at least 1".into()));
    }
    Ok(Limits { step_cap: max_steps, node_cap })
}

fn bracket_options(e: &EngineArgs) -> Result<BracketOptions, Failure> {
    let eps = parse_rat("--epsilon", &e.epsilon)?;
    if eps <= Rat::from_integer(0.into()) {
        return Err(Failure::Input("--epsilon must be positive".into()));
    }
    Ok(BracketOptions { eps, n_max: e.max_steps, limits: limits(e.max_steps, e.node_cap)? })
}

/// Exact rationals, as decimals when the expansion is finite and short.
fn show(q: &Rat) -> String {
    let mut d = q.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&d % 2u32).is_zero() {
        d /= 2u32;
        twos += 1;
    }
    while (&d % 5u32).is_zero() {
        d /= 5u32;
        fives += 1;
    }
    let places = twos.max(fives);
    if !d.is_one() || places > 9 {
        return chp_core::syntax::fmt_rational(q);
    }
    if places == 0 {
        return q.numer().to_string();
    }
    let n = (q * Rat::from_integer(BigInt::from(10u32).pow(places as u32))).to_integer();
    let digits = format!("{:0>width$}", n.abs(), width = places + 1);
    let (int, frac) = digits.split_at(digits.len() - places);
    format!("{}{int}.{frac}", if n.is_negative() { "-" } else { "" })
}

fn states_for(init: &Option<PathBuf>, c: &Command, b: &DomainBounds) -> Result<Vec<ProgState>, Failure> {
    match init {
        Some(p) => Ok(vec![load_state(p)?]),
        None => Ok(initial_states(c, b)),
    }
}

fn vars_of(c: &Command, exps: &[&Expectation], init: &Option<ProgState>) -> BTreeSet<VarName> {
    let mut vars = free_vars_cmd(c);
    for e in exps {
        vars.extend(e.free_vars());
    }
    if let Some(st) = init {
        vars.extend(st.stack.iter().map(|(x, _)| x.clone()));
    }
    vars
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Cmd::Parse { program, tree } => {
            let c = load_program(&program)?;
            if tree {
                println!("{c:#?}");
            } else {
                println!("{c}");
            }
        }
        Cmd::Eval { expectation, init, bounds: ba } => {
            let e = load_exp(&expectation)?;
            let st = init.as_deref().map(load_state).transpose()?;
            let mut vars = e.free_vars();
            if let Some(st) = &st {
                vars.extend(st.stack.iter().map(|(x, _)| x.clone()));
            }
            let b = bounds(&ba, vars)?;
            let ev = Evaluator::new(&b);
            match st {
                Some(st) => println!("{}", show(&ev.eval_state(&e, &st)?)),
                None => {
                    for st in ev.states(&e.free_vars()) {
                        println!("{}\t{}\t{}", st.stack, st.heap, show(&ev.eval_state(&e, &st)?));
                    }
                }
            }
        }
        Cmd::Wlp { program, post, init, report, bounds: ba, engine } => {
            let c = load_program(&program)?;
            let x = load_exp(&post)?;
            let st = init.as_deref().map(load_state).transpose()?;
            let b = bounds(&ba, vars_of(&c, &[&x], &st))?;
            let opts = bracket_options(&engine)?;
            let states = match st {
                Some(st) => vec![st],
                None => initial_states(&c, &b),
            };
            let reports = wlp_brackets(&c, &x, &states, &b, &opts)?;
            if reports.iter().any(|r| r.truncated) {
                eprintln!("warning: state space truncated at the step cap; brackets are widened");
            }
            for r in &reports {
                let exact = if r.bracket.lower == r.bracket.upper { "exact" } else { "bracket" };
                let (lo, hi) = (show(&r.bracket.lower), show(&r.bracket.upper));
                match report {
                    Report::Summary => println!("{lo} {hi} {exact}"),
                    Report::Table => println!("{}\t{}\t{lo}\t{hi}\t{}", r.state.stack, r.state.heap, exact == "exact"),
                }
                if !r.converged {
                    eprintln!("warning: bracket wider than epsilon after {} iterations", r.iterations);
                }
            }
        }
        Cmd::Wrlp { program, post, inv, n, init, bounds: ba, engine } => {
            let c = load_program(&program)?;
            let x = load_exp(&post)?;
            let i = match &inv {
                Some(p) => load_exp(p)?,
                None => Expectation::emp(),
            };
            let st = init.as_deref().map(load_state).transpose()?;
            let b = bounds(&ba, vars_of(&c, &[&x, &i], &st))?;
            limits(engine.max_steps, engine.node_cap)?;
            let states = match st {
                Some(st) => vec![st],
                None => initial_states(&c, &b),
            };
            for (st, v) in wslp_n(&c, &x, &i, &b, n, &states)? {
                println!("{}\t{}\t{}", st.stack, st.heap, show(&v));
            }
        }
        Cmd::Check { proof, bounds: ba } => {
            let tree = in_file(&proof, load_proof(&proof))?;
            let b = bounds(&ba, proof_vars(&tree))?;
            match check(&tree, &b) {
                Ok(cert) => println!("{cert}"),
                Err(e) => return Err(check_failure(&e)),
            }
        }
        Cmd::Simulate { program, post, init, policy, priority, trials, seed, max_steps, bounds: ba } => {
            let c = load_program(&program)?;
            let x = load_exp(&post)?;
            let st = load_state(&init)?;
            let b = bounds(&ba, vars_of(&c, &[&x], &Some(st.clone())))?;
            if trials == 0 || max_steps == 0 {
                return Err(Failure::Input("--trials and --max-steps must be at least 1".into()));
            }
            let policy = match policy {
                PolicyKind::Uniform => Policy::UniformRandom(seed),
                PolicyKind::Priority => Policy::FixedPriority(priority),
                PolicyKind::RoundRobin => Policy::RoundRobinThreads(seed),
            };
            let est = estimate_liberal(&c, &x, &st, &policy, trials, max_steps, seed, &b)?;
            if est.blocked > 0 {
                eprintln!("warning: {} runs reached a blocked configuration", est.blocked);
            }
            println!("trials\tmean\tstderr\taborted%\tcutoff%");
            println!("{}", est.tsv());
        }
        Cmd::Ast { program, init, bounds: ba, max_steps, node_cap } => {
            let c = load_program(&program)?;
            let st = init.as_deref().map(load_state).transpose()?;
            let b = bounds(&ba, vars_of(&c, &[], &st))?;
            let states = states_for(&init, &c, &b)?;
            let rep = check_ast_from(&c, &states, &b, limits(max_steps, node_cap)?)?;
            if rep.ast {
                println!("yes");
            } else {
                println!("no");
                if rep.truncated {
                    println!("state space truncated; unexplored configurations count as non-terminating");
                }
                println!("{} configurations can avoid termination surely, for example:", rep.witness.len());
                for cfg in rep.witness.iter().take(5) {
                    println!("  {cfg}");
                }
            }
        }
        Cmd::EmitMdp { program, init, table, bounds: ba, max_steps, node_cap } => {
            let c = load_program(&program)?;
            let st = load_state(&init)?;
            let b = bounds(&ba, vars_of(&c, &[], &Some(st.clone())))?;
            let stepper = Stepper::new(&b);
            let space = build_from(&stepper, vec![Config::new(c, st)], limits(max_steps, node_cap)?)?;
            print!("{}", space.transitions_text());
            match table {
                Some(path) => fs::write(&path, space.nodes_text())
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
                None => {
                    println!();
                    print!("{}", space.nodes_text());
                }
            }
        }
    }
    Ok(())
}

fn proof_vars(tree: &ProofNode) -> BTreeSet<VarName> {
    let mut vars = BTreeSet::new();
    for (_, n) in tree.walk() {
        let j = &n.conclusion;
        vars.extend(free_vars_cmd(&j.cmd));
        for e in [Some(&j.pre), Some(&j.post), j.invariant.as_ref()].into_iter().flatten() {
            vars.extend(e.free_vars());
        }
        let p = &n.payload;
        for e in [&p.mid, &p.loop_invariant, &p.pi, &p.frame].into_iter().flatten() {
            vars.extend(e.free_vars());
        }
        if let Some(w) = &p.weight {
            w.vars(&mut vars);
        }
    }
    vars
}

fn check_failure(e: &CheckError) -> Failure {
    let mut msg = format!("proof rejected: {e}");
    if let CheckError::EntailmentFails { witness, lhs, rhs, .. } = e {
        msg.push_str(&format!(
            "\nwitness: stack {} heap {}\n  lhs {} = {}\n  rhs {} = {}",
            witness.state.stack,
            witness.state.heap,
            lhs,
            show(&witness.lhs),
            rhs,
            show(&witness.rhs)
        ));
    }
    Failure::Semantic(msg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Semantic(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
