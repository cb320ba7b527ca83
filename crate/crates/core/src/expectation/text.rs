//! Text form of expectations (`.exp` files).
//!
//! Precedence from loosest to tightest: `-*` (right associative), `+`, `*`,
//! `**`, `^`, postfix substitution `E[x := e]`. Binders `sup x.`, `inf x.` and
//! `bigstar x in [a,b].` extend as far right as possible.

use super::{Expectation, Predicate};
use crate::error::Result;
use crate::syntax::{fmt_rational, ArithExpr, CmpOp, Guard, Parser, Tok};

pub fn parse_expectation(text: &str) -> Result<Expectation> {
    let mut p = Parser::new(text)?;
    let e = exp(&mut p)?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_predicate(text: &str) -> Result<Predicate> {
    let mut p = Parser::new(text)?;
    let e = pred(&mut p)?;
    p.expect_eof()?;
    Ok(e)
}

fn exp(p: &mut Parser) -> Result<Expectation> {
    if p.is_kw("sup") || p.is_kw("inf") {
        let is_sup = p.is_kw("sup");
        p.bump();
        let x = p.var_name()?;
        p.expect_sym(".")?;
        let body = exp(p)?;
        return Ok(if is_sup { Expectation::sup(&x, body) } else { Expectation::inf(&x, body) });
    }
    if p.is_kw("bigstar") {
        p.bump();
        let x = p.var_name()?;
        p.expect_kw("in")?;
        p.expect_sym("[")?;
        let lo = p.arith()?;
        p.expect_sym(",")?;
        let hi = p.arith()?;
        p.expect_sym("]")?;
        p.expect_sym(".")?;
        let body = exp(p)?;
        return Ok(Expectation::big_sep(&x, lo, hi, body));
    }
    let lhs = sum(p)?;
    if p.eat_sym("-*") {
        return Ok(Expectation::wand(lhs, exp(p)?));
    }
    Ok(lhs)
}

fn sum(p: &mut Parser) -> Result<Expectation> {
    let mut lhs = product(p)?;
    while p.eat_sym("+") {
        lhs = Expectation::add(lhs, product(p)?);
    }
    Ok(lhs)
}

fn product(p: &mut Parser) -> Result<Expectation> {
    let mut lhs = sep(p)?;
    while p.eat_sym("*") {
        lhs = Expectation::mul(lhs, sep(p)?);
    }
    Ok(lhs)
}

fn sep(p: &mut Parser) -> Result<Expectation> {
    let mut lhs = power(p)?;
    while p.eat_sym("**") {
        lhs = Expectation::sep(lhs, power(p)?);
    }
    Ok(lhs)
}

fn power(p: &mut Parser) -> Result<Expectation> {
    let base = postfix(p)?;
    if p.eat_sym("^") {
        let n = match p.peek().clone() {
            Tok::Sym("(") => {
                p.bump();
                let e = p.arith()?;
                p.expect_sym(")")?;
                e
            }
            Tok::Int(s) => {
                p.bump();
                match s.parse() {
                    Ok(n) => ArithExpr::Lit(n),
                    Err(_) => return p.err("exponent too large"),
                }
            }
            Tok::Ident(_) => ArithExpr::Var(p.var_name()?),
            _ => return p.err("expected an exponent"),
        };
        return Ok(Expectation::pow(base, n));
    }
    Ok(base)
}

fn postfix(p: &mut Parser) -> Result<Expectation> {
    let mut e = atom(p)?;
    while p.is_sym("[") && matches!(p.peek_at(1), Tok::Ident(_)) && matches!(p.peek_at(2), Tok::Sym(":=")) {
        p.bump();
        let x = p.var_name()?;
        p.expect_sym(":=")?;
        let by = p.arith()?;
        p.expect_sym("]")?;
        e = e.subst(&x, by);
    }
    Ok(e)
}

fn points_to_tail(p: &mut Parser, loc: ArithExpr, allow_list: bool) -> Result<Predicate> {
    if p.is_sym("-") && !matches!(p.peek_at(1), Tok::Int(_) | Tok::Ident(_) | Tok::Sym("(")) {
        p.bump();
        return Ok(Predicate::Allocated(loc));
    }
    let mut vals = vec![p.arith()?];
    while allow_list && p.eat_sym(",") {
        vals.push(p.arith()?);
    }
    Ok(Predicate::PointsTo(loc, vals))
}

fn two_args(p: &mut Parser) -> Result<(Expectation, Expectation)> {
    p.expect_sym("(")?;
    let a = exp(p)?;
    p.expect_sym(",")?;
    let b = exp(p)?;
    p.expect_sym(")")?;
    Ok((a, b))
}

fn atom(p: &mut Parser) -> Result<Expectation> {
    if p.is_kw("emp") {
        p.bump();
        return Ok(Expectation::emp());
    }
    if p.is_kw("max") || p.is_kw("min") {
        let is_max = p.is_kw("max");
        p.bump();
        let (a, b) = two_args(p)?;
        return Ok(if is_max { Expectation::max(a, b) } else { Expectation::min(a, b) });
    }
    if p.is_kw("scale") && matches!(p.peek_at(1), Tok::Sym("(")) {
        p.bump();
        p.bump();
        let q = p.rational()?;
        p.expect_sym(",")?;
        let body = exp(p)?;
        p.expect_sym(")")?;
        return Ok(Expectation::scale(q, body));
    }
    if p.is_kw("sup") || p.is_kw("inf") || p.is_kw("bigstar") {
        return exp(p);
    }
    if p.eat_sym("[") {
        let inner = pred(p)?;
        p.expect_sym("]")?;
        return Ok(Expectation::Iverson(inner));
    }
    let bare = p.attempt(|p| {
        let loc = p.arith()?;
        p.expect_sym("|->")?;
        points_to_tail(p, loc, false)
    });
    if let Some(pt) = bare {
        return Ok(Expectation::Iverson(pt));
    }
    if p.eat_sym("(") {
        let e = exp(p)?;
        p.expect_sym(")")?;
        return Ok(e);
    }
    if matches!(p.peek(), Tok::Int(_) | Tok::Decimal(_)) {
        return Ok(Expectation::Const(p.rational()?));
    }
    p.err("expected an expectation")
}

fn pred(p: &mut Parser) -> Result<Predicate> {
    let mut lhs = pred_and(p)?;
    while p.eat_sym("||") {
        lhs = Predicate::Or(Box::new(lhs), Box::new(pred_and(p)?));
    }
    Ok(lhs)
}

fn pred_and(p: &mut Parser) -> Result<Predicate> {
    let mut lhs = pred_not(p)?;
    while p.eat_sym("&&") {
        lhs = Predicate::And(Box::new(lhs), Box::new(pred_not(p)?));
    }
    Ok(lhs)
}

fn pred_not(p: &mut Parser) -> Result<Predicate> {
    if p.eat_sym("!") {
        return Ok(Predicate::Not(Box::new(pred_not(p)?)));
    }
    if p.is_kw("emp") {
        p.bump();
        return Ok(Predicate::Emp);
    }
    if p.is_kw("true") || p.is_kw("false") {
        let g = if p.is_kw("true") { Guard::True } else { Guard::False };
        p.bump();
        return Ok(Predicate::StackGuard(g));
    }
    if p.is_sym("(") {
        let nested = p.attempt(|p| {
            p.bump();
            let inner = pred(p)?;
            p.expect_sym(")")?;
            Ok(inner)
        });
        if let Some(inner) = nested {
            return Ok(inner);
        }
    }
    let a = p.arith()?;
    if p.eat_sym("|->") {
        return points_to_tail(p, a, true);
    }
    let Some(op) = p.cmp_op() else {
        return p.err("expected `|->` or a comparison");
    };
    let b = p.arith()?;
    Ok(match op {
        CmpOp::Eq => Predicate::EqExpr(a, b),
        _ => Predicate::StackGuard(Guard::Cmp(op, a, b)),
    })
}

fn level(e: &Expectation) -> u8 {
    match e {
        Expectation::SupVal(..) | Expectation::InfVal(..) | Expectation::BigSepMul(..) => 0,
        Expectation::GuardedWand(..) => 1,
        Expectation::Add(..) => 2,
        Expectation::Mul(..) => 3,
        Expectation::SepMul(..) => 4,
        Expectation::Pow(..) => 5,
        Expectation::Subst(..) => 6,
        Expectation::Const(_) | Expectation::Iverson(_) | Expectation::Max(..) | Expectation::Min(..) | Expectation::Scale(..) => 7,
    }
}

fn at(e: &Expectation, min: u8) -> String {
    let s = print(e);
    if level(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn exponent(n: &ArithExpr) -> String {
    match n {
        ArithExpr::Lit(k) if *k >= 0 => k.to_string(),
        ArithExpr::Var(x) => x.to_string(),
        _ => format!("({n})"),
    }
}

pub fn print(e: &Expectation) -> String {
    match e {
        Expectation::Const(q) => fmt_rational(q),
        Expectation::Iverson(Predicate::Emp) => "emp".into(),
        Expectation::Iverson(p) => format!("[{}]", print_pred(p)),
        Expectation::Add(a, b) => format!("{} + {}", at(a, 2), at(b, 3)),
        Expectation::Mul(a, b) => format!("{} * {}", at(a, 3), at(b, 4)),
        Expectation::SepMul(a, b) => format!("{} ** {}", at(a, 4), at(b, 5)),
        Expectation::GuardedWand(a, b) => format!("{} -* {}", at(a, 2), at(b, 1)),
        Expectation::Max(a, b) => format!("max({}, {})", print(a), print(b)),
        Expectation::Min(a, b) => format!("min({}, {})", print(a), print(b)),
        Expectation::Pow(a, n) => format!("{}^{}", at(a, 6), exponent(n)),
        Expectation::Subst(a, x, by) => format!("{}[{x} := {by}]", at(a, 7)),
        Expectation::SupVal(x, a) => format!("sup {x}. {}", print(a)),
        Expectation::InfVal(x, a) => format!("inf {x}. {}", print(a)),
        Expectation::BigSepMul(x, lo, hi, a) => format!("bigstar {x} in [{lo}, {hi}]. {}", print(a)),
        Expectation::Scale(q, a) => format!("scale({}, {})", fmt_rational(q), print(a)),
    }
}

fn pred_level(p: &Predicate) -> u8 {
    match p {
        Predicate::Or(..) => 1,
        Predicate::And(..) => 2,
        Predicate::Not(_) => 3,
        Predicate::StackGuard(Guard::Or(..)) => 1,
        Predicate::StackGuard(Guard::And(..)) => 2,
        _ => 4,
    }
}

fn pred_at(p: &Predicate, min: u8) -> String {
    let s = print_pred(p);
    if pred_level(p) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_pred(p: &Predicate) -> String {
    match p {
        Predicate::Emp => "emp".into(),
        Predicate::PointsTo(e, vals) => {
            let vs: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            format!("{e} |-> {}", vs.join(", "))
        }
        Predicate::Allocated(e) => format!("{e} |-> -"),
        Predicate::EqExpr(a, b) => format!("{a} = {b}"),
        Predicate::StackGuard(g) => g.to_string(),
        Predicate::And(a, b) => format!("{} && {}", pred_at(a, 2), pred_at(b, 3)),
        Predicate::Or(a, b) => format!("{} || {}", pred_at(a, 1), pred_at(b, 2)),
        Predicate::Not(a) => format!("!({})", print_pred(a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use crate::syntax::ArithExpr as A;

    #[test]
    fn parses_running_invariant() {
        let e = parse_expectation("max(r |-> 0, r |-> -1)").unwrap();
        assert_eq!(e, Expectation::max(Expectation::pts(A::var("r"), 0), Expectation::pts(A::var("r"), -1)));
        let e = parse_expectation("0.5 ** [r |-> -]").unwrap();
        assert_eq!(e, Expectation::sep(Expectation::Const(rat(1, 2)), Expectation::allocated(A::var("r"))));
    }

    #[test]
    fn binders_and_postfix() {
        let e = parse_expectation("sup v. [r |-> v] ** ([r |-> v] -* [y = 0][y := v])").unwrap();
        let Expectation::SupVal(v, body) = &e else { panic!("{e:?}") };
        assert_eq!(v.as_str(), "v");
        assert!(matches!(**body, Expectation::SepMul(..)));
        let e = parse_expectation("bigstar i in [0, k]. [z + i |-> 0]").unwrap();
        assert!(matches!(e, Expectation::BigSepMul(..)));
    }

    #[test]
    fn precedence() {
        let e = parse_expectation("1/2 * [x = 0] + 1/2 * [x = 1]").unwrap();
        assert!(matches!(e, Expectation::Add(..)));
        let e = parse_expectation("[x |-> 0] -* [y = 0] ** emp").unwrap();
        let Expectation::GuardedWand(_, body) = &e else { panic!() };
        assert!(matches!(**body, Expectation::SepMul(..)));
        let e = parse_expectation("1/2^y").unwrap();
        assert!(matches!(e, Expectation::Pow(..)));
    }

    #[test]
    fn printing_round_trips() {
        let texts = [
            "max([r |-> 0], [r |-> -1])",
            "1/2 ** max([r |-> 0], [r |-> -1])",
            "sup v. [r |-> v] ** ([r |-> v] -* [y = 0][y := v])",
            "[x != 0] * 1/3 + [x = 0] * (emp -* 1)",
            "bigstar i in [0, 1]. [z + i |-> 0, 1] ** [x |-> -]",
            "(1/2 + 1/3)^(k - 1)",
            "scale(3/2, 1/3 * [y < 2 && !(x = 1)])",
            "inf v. [v |-> 1] -* [x = v][x := v]",
        ];
        for t in texts {
            let e = parse_expectation(t).unwrap();
            let printed = print(&e);
            assert_eq!(parse_expectation(&printed).unwrap(), e, "{t} printed as {printed}");
        }
    }

    #[test]
    fn bad_input_is_a_syntax_error() {
        assert!(parse_expectation("max(1,").is_err());
        assert!(parse_expectation("[x |->]").is_err());
        assert!(parse_expectation("1 +").is_err());
    }
}
