
use super::{ArithExpr, Command, Guard, ProbExpr};
use crate::Rat;

pub fn rational(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn arith_prec(e: &ArithExpr) -> u8 {
    match e {
        ArithExpr::Add(..) | ArithExpr::Sub(..) => 1,
        ArithExpr::Mul(..) => 2,
        ArithExpr::Lit(_) | ArithExpr::Var(_) => 3,
    }
}

fn arith_at(e: &ArithExpr, min: u8) -> String {
    let s = arith(e);
    if arith_prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn arith(e: &ArithExpr) -> String {
    match e {
        ArithExpr::Lit(n) => n.to_string(),
        ArithExpr::Var(x) => x.to_string(),
        ArithExpr::Add(a, b) => format!("{} + {}", arith_at(a, 1), arith_at(b, 2)),
        ArithExpr::Sub(a, b) => format!("{} - {}", arith_at(a, 1), arith_at(b, 2)),
        ArithExpr::Mul(a, b) => format!("{} * {}", arith_at(a, 2), arith_at(b, 3)),
    }
}

fn guard_prec(g: &Guard) -> u8 {
    match g {
        Guard::Or(..) => 1,
        Guard::And(..) => 2,
        Guard::Not(_) => 3,
        Guard::True | Guard::False | Guard::Cmp(..) => 4,
    }
}

fn guard_at(g: &Guard, min: u8) -> String {
    let s = guard(g);
    if guard_prec(g) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn guard(g: &Guard) -> String {
    match g {
        Guard::True => "true".into(),
        Guard::False => "false".into(),
        Guard::Cmp(op, a, b) => format!("{} {} {}", arith(a), op.symbol(), arith(b)),
        Guard::And(a, b) => format!("{} && {}", guard_at(a, 2), guard_at(b, 3)),
        Guard::Or(a, b) => format!("{} || {}", guard_at(a, 1), guard_at(b, 2)),
        // Comparisons are parenthesised under negation so that `!` never
        // appears to apply to the left operand alone.
        Guard::Not(a) => format!("!{}", guard_at(a, 5)),
    }
}

pub fn prob(p: &ProbExpr) -> String {
    match p {
        ProbExpr::Lit(q) => rational(q),
        ProbExpr::Cond(g, a, b) => format!("({}) ? {} : {}", guard(g), prob(a), prob(b)),
    }
}

fn braced(c: &Command) -> String {
    format!("{{{}}}", command(c))
}

pub fn command(c: &Command) -> String {
    match c {
        Command::Terminated => "skip".into(),
        Command::Diverge => "diverge".into(),
        Command::Assign(x, e) => format!("{x} := {}", arith(e)),
        Command::ProbChoice(a, p, b) => format!("{} [{}] {}", braced(a), prob(p), braced(b)),
        Command::Seq(a, b) => {
            let left = if matches!(**a, Command::Seq(..)) { braced(a) } else { command(a) };
            format!("{left}; {}", command(b))
        }
        Command::Atomic(a) => format!("atomic {}", braced(a)),
        Command::IfThenElse(g, a, b) => {
            if **b == Command::Terminated {
                format!("if ({}) {}", guard(g), braced(a))
            } else {
                format!("if ({}) {} else {}", guard(g), braced(a), braced(b))
            }
        }
        Command::While(g, a) => format!("while ({}) {}", guard(g), braced(a)),
        Command::Concurrent(a, b) => format!("{} ||| {}", braced(a), braced(b)),
        Command::Alloc(x, es) => {
            let args: Vec<String> = es.iter().map(arith).collect();
            format!("{x} := new({})", args.join(", "))
        }
        Command::Free(e) => format!("free({})", arith(e)),
        Command::Lookup(x, e) => format!("{x} := <{}>", arith(e)),
        Command::Mutate(l, e) => format!("<{}> := {}", arith(l), arith(e)),
    }
}
