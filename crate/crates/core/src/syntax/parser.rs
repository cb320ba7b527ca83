use std::sync::Arc;

use num::{BigInt, Num};

use super::lexer::{Lexer, Tok, Token};
use super::{ArithExpr, CmpOp, Command, Guard, ProbExpr, VarName, KEYWORDS};
use crate::error::{Error, Result};
use crate::Rat;

/// Recursive-descent parser over a token vector; backtracking is done by
/// saving and restoring `pos`.
pub struct Parser {
    toks: Vec<Token>,
    pub pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self> {
        Ok(Parser { toks: Lexer::tokenize(src)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) | Tok::Int(s) | Tok::Decimal(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(Error::Syntax { line: t.line, col: t.col, msg: format!("{}, found {found}", msg.into()) })
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`"))
        }
    }

    pub fn expect_eof(&mut self) -> Result<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.err("expected end of input")
        }
    }

    pub fn var_name(&mut self) -> Result<VarName> {
        match self.peek().clone() {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => {
                self.err(format!("reserved word `{s}` used as a variable"))
            }
            Tok::Ident(s) => {
                self.bump();
                VarName::new(&s)
            }
            _ => self.err("expected a variable"),
        }
    }

    /// Runs `f`, restoring the position if it fails.
    pub fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Option<T> {
        let save = self.pos;
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    fn int_literal(&mut self) -> Result<i64> {
        match self.peek().clone() {
            Tok::Int(s) => match s.parse::<i64>() {
                Ok(n) => {
                    self.bump();
                    Ok(n)
                }
                Err(_) => self.err("integer literal too large"),
            },
            _ => self.err("expected an integer"),
        }
    }

    pub fn arith(&mut self) -> Result<ArithExpr> {
        let mut lhs = self.arith_term()?;
        loop {
            if self.eat_sym("+") {
                lhs = ArithExpr::add(lhs, self.arith_term()?);
            } else if self.is_sym("-") && self.starts_arith_at(1) {
                self.bump();
                lhs = ArithExpr::sub(lhs, self.arith_term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_arith_at(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Int(_) => true,
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()),
            Tok::Sym(s) => *s == "(" || *s == "-",
            _ => false,
        }
    }

    fn arith_term(&mut self) -> Result<ArithExpr> {
        let mut lhs = self.arith_factor()?;
        // `*` followed by something that cannot start an arithmetic factor
        // belongs to an enclosing expectation.
        while self.is_sym("*") && self.starts_arith_at(1) {
            self.bump();
            lhs = ArithExpr::mul(lhs, self.arith_factor()?);
        }
        Ok(lhs)
    }

    fn arith_factor(&mut self) -> Result<ArithExpr> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(ArithExpr::Lit(self.int_literal()?)),
            Tok::Sym("-") => {
                self.bump();
                if let Tok::Int(_) = self.peek() {
                    Ok(ArithExpr::Lit(-self.int_literal()?))
                } else {
                    Ok(ArithExpr::sub(ArithExpr::Lit(0), self.arith_factor()?))
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.arith()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(ArithExpr::Var(self.var_name()?)),
            _ => self.err("expected an arithmetic expression"),
        }
    }

    pub fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    pub fn guard(&mut self) -> Result<Guard> {
        let mut lhs = self.guard_and()?;
        while self.eat_sym("||") {
            lhs = Guard::or(lhs, self.guard_and()?);
        }
        Ok(lhs)
    }

    fn guard_and(&mut self) -> Result<Guard> {
        let mut lhs = self.guard_not()?;
        while self.eat_sym("&&") {
            lhs = Guard::and(lhs, self.guard_not()?);
        }
        Ok(lhs)
    }

    fn guard_not(&mut self) -> Result<Guard> {
        if self.eat_sym("!") {
            return Ok(Guard::not(self.guard_not()?));
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(Guard::True);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(Guard::False);
        }
        if self.is_sym("(") {
            let nested = self.attempt(|p| {
                p.bump();
                let g = p.guard()?;
                p.expect_sym(")")?;
                Ok(g)
            });
            if let Some(g) = nested {
                return Ok(g);
            }
        }
        let a = self.arith()?;
        let Some(op) = self.cmp_op() else {
            return self.err("expected a comparison operator");
        };
        let b = self.arith()?;
        Ok(Guard::Cmp(op, a, b))
    }

    /// `a/b`, an integer, or a decimal with at most nine fractional digits.
    pub fn rational(&mut self) -> Result<Rat> {
        match self.peek().clone() {
            Tok::Decimal(s) => {
                let (int, frac) = s.split_once('.').expect("decimal token has a dot");
                if frac.len() > 9 {
                    return self.err("decimal literals allow at most 9 fractional digits");
                }
                self.bump();
                let num = BigInt::from_str_radix(&format!("{int}{frac}"), 10).expect("digits");
                Ok(Rat::new(num, BigInt::from(10).pow(frac.len() as u32)))
            }
            Tok::Int(s) => {
                self.bump();
                let num = BigInt::from_str_radix(&s, 10).expect("digits");
                if self.is_sym("/") && matches!(self.peek_at(1), Tok::Int(_)) {
                    self.bump();
                    let Tok::Int(d) = self.bump() else { unreachable!() };
                    let den = BigInt::from_str_radix(&d, 10).expect("digits");
                    if den == BigInt::from(0) {
                        return self.err("zero denominator");
                    }
                    return Ok(Rat::new(num, den));
                }
                Ok(Rat::from_integer(num))
            }
            _ => self.err("expected a rational literal"),
        }
    }

    pub fn prob(&mut self) -> Result<ProbExpr> {
        if self.eat_sym("(") {
            let g = self.guard()?;
            self.expect_sym(")")?;
            self.expect_sym("?")?;
            let a = self.prob()?;
            self.expect_sym(":")?;
            let b = self.prob()?;
            return Ok(ProbExpr::Cond(g, Box::new(a), Box::new(b)));
        }
        let q = self.rational()?;
        if q < crate::rat_int(0) || q > crate::rat_int(1) {
            return self.err(format!("probability {q} outside [0,1]"));
        }
        Ok(ProbExpr::Lit(q))
    }

    pub fn command(&mut self) -> Result<Command> {
        let first = self.simple_command()?;
        if self.eat_sym(";") {
            let rest = self.command()?;
            return Ok(Command::Seq(Arc::new(first), Arc::new(rest)));
        }
        Ok(first)
    }

    fn braced(&mut self) -> Result<Command> {
        self.expect_sym("{")?;
        let c = self.command()?;
        self.expect_sym("}")?;
        Ok(c)
    }

    fn simple_command(&mut self) -> Result<Command> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "skip" => {
                self.bump();
                Ok(Command::Terminated)
            }
            Tok::Ident(kw) if kw == "diverge" => {
                self.bump();
                Ok(Command::Diverge)
            }
            Tok::Ident(kw) if kw == "atomic" => {
                self.bump();
                Ok(Command::Atomic(Arc::new(self.braced()?)))
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                self.expect_sym("(")?;
                let g = self.guard()?;
                self.expect_sym(")")?;
                let then = self.braced()?;
                let els = if self.is_kw("else") {
                    self.bump();
                    self.braced()?
                } else {
                    Command::Terminated
                };
                Ok(Command::IfThenElse(g, Arc::new(then), Arc::new(els)))
            }
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                self.expect_sym("(")?;
                let g = self.guard()?;
                self.expect_sym(")")?;
                Ok(Command::While(g, Arc::new(self.braced()?)))
            }
            Tok::Ident(kw) if kw == "free" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.arith()?;
                self.expect_sym(")")?;
                Ok(Command::Free(e))
            }
            Tok::Sym("<") => {
                self.bump();
                let loc = self.arith()?;
                self.expect_sym(">")?;
                self.expect_sym(":=")?;
                Ok(Command::Mutate(loc, self.arith()?))
            }
            Tok::Sym("{") => {
                let left = self.braced()?;
                if self.eat_sym("[") {
                    let p = self.prob()?;
                    self.expect_sym("]")?;
                    let right = self.braced()?;
                    Ok(Command::ProbChoice(Arc::new(left), p, Arc::new(right)))
                } else if self.eat_sym("|||") {
                    let right = self.braced()?;
                    Ok(Command::Concurrent(Arc::new(left), Arc::new(right)))
                } else {
                    Ok(left)
                }
            }
            Tok::Ident(_) => {
                let x = self.var_name()?;
                self.expect_sym(":=")?;
                if self.is_kw("new") {
                    self.bump();
                    self.expect_sym("(")?;
                    let mut args = vec![self.arith()?];
                    while self.eat_sym(",") {
                        args.push(self.arith()?);
                    }
                    self.expect_sym(")")?;
                    Ok(Command::Alloc(x, args))
                } else if self.eat_sym("<") {
                    let loc = self.arith()?;
                    self.expect_sym(">")?;
                    Ok(Command::Lookup(x, loc))
                } else {
                    Ok(Command::Assign(x, self.arith()?))
                }
            }
            _ => self.err("expected a command"),
        }
    }
}

pub fn parse_program(text: &str) -> Result<Command> {
    let mut p = Parser::new(text)?;
    let c = p.command()?;
    p.expect_eof()?;
    Ok(c)
}

pub fn parse_arith(text: &str) -> Result<ArithExpr> {
    let mut p = Parser::new(text)?;
    let e = p.arith()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_prob(text: &str) -> Result<ProbExpr> {
    let mut p = Parser::new(text)?;
    let e = p.prob()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_guard(text: &str) -> Result<Guard> {
    let mut p = Parser::new(text)?;
    let g = p.guard()?;
    p.expect_eof()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn keyword_commands() {
        assert_eq!(parse_program("diverge").unwrap(), Command::Diverge);
        assert_eq!(parse_program("skip").unwrap(), Command::Terminated);
    }

    #[test]
    fn probabilistic_choice_is_exact() {
        let c = parse_program("{r := 0} [0.5] {r := 1}").unwrap();
        assert_eq!(c, Command::prob(Command::assign("r", 0), rat(1, 2), Command::assign("r", 1)));
        let c = parse_program("{r := 0} [1/3] {r := 1}").unwrap();
        assert_eq!(c, Command::prob(Command::assign("r", 0), rat(1, 3), Command::assign("r", 1)));
    }

    #[test]
    fn incomplete_parallel_is_rejected() {
        assert!(matches!(parse_program("x := 1 |||"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_program("{x := 1} |||"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn sequence_is_right_associative() {
        let c = parse_program("a := 1; b := 2; c := 3").unwrap();
        let expected = Command::seq(
            Command::assign("a", 1),
            Command::seq(Command::assign("b", 2), Command::assign("c", 3)),
        );
        assert_eq!(c, expected);
    }

    #[test]
    fn if_without_else_gets_skip() {
        let c = parse_program("if (x != 0) { x := 0 }").unwrap();
        assert_eq!(
            c,
            Command::ite(
                Guard::cmp(CmpOp::Ne, ArithExpr::var("x"), 0),
                Command::assign("x", 0),
                Command::Terminated
            )
        );
    }

    #[test]
    fn heap_commands() {
        let c = parse_program("<r> := -1; y := <r>; z := new(1, y + 2); free(z)").unwrap();
        let Command::Seq(first, _) = &c else { panic!() };
        assert_eq!(**first, Command::mutate(ArithExpr::var("r"), -1));
    }

    #[test]
    fn running_example_parses() {
        let src = "<r> := -1; { {<r> := 0} [0.5] {<r> := 1} } ||| { y := <r>; while (y = -1) { y := <r> } }";
        let c = parse_program(src).unwrap();
        let Command::Seq(_, par) = c else { panic!() };
        assert!(matches!(*par, Command::Concurrent(..)));
    }

    #[test]
    fn reserved_words_are_not_variables() {
        assert!(parse_program("while := 1").is_err());
        assert!(parse_program("x := new").is_err());
    }

    #[test]
    fn guards_with_parentheses() {
        let g = parse_guard("(x + 1) < 2 && !(y = 0 || true)").unwrap();
        assert!(matches!(g, Guard::And(..)));
    }

    #[test]
    fn decimal_precision_is_limited() {
        assert!(parse_program("{skip} [0.1234567891] {skip}").is_err());
        assert!(parse_program("{skip} [0.123456789] {skip}").is_ok());
        assert!(parse_program("{skip} [3/2] {skip}").is_err());
    }

    #[test]
    fn conditional_probability() {
        let c = parse_program("{skip} [(x = 0) ? 1/2 : 1] {diverge}").unwrap();
        let Command::ProbChoice(_, ProbExpr::Cond(..), _) = c else { panic!() };
    }
}
