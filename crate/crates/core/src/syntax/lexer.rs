use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned integer literal.
    Int(String),
    /// Decimal literal `digits.digits`, kept verbatim for exact parsing.
    Decimal(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest symbols first so that prefixes never shadow them.
const SYMBOLS: &[&str] = &[
    "|||", "|->", ":=", "**", "-*", "<=", ">=", "!=", "&&", "||", ";", "{", "}", "[", "]", "(",
    ")", ",", "<", ">", "=", "+", "-", "*", "^", ".", "?", ":", "/", "!",
];

pub struct Lexer;

impl Lexer {
    pub fn tokenize(src: &str) -> Result<Vec<Token>> {
        let chars: Vec<char> = src.chars().collect();
        let mut out = Vec::new();
        let (mut i, mut line, mut col) = (0, 1, 1);
        while i < chars.len() {
            let c = chars[i];
            if c == '\n' {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            if c.is_whitespace() {
                i += 1;
                col += 1;
                continue;
            }
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            let start_col = col;
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token { tok: Tok::Ident(word), line, col: start_col });
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut tok = None;
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    tok = Some(Tok::Decimal(chars[start..i].iter().collect()));
                }
                let tok = tok.unwrap_or_else(|| Tok::Int(chars[start..i].iter().collect()));
                col += i - start;
                out.push(Token { tok, line, col: start_col });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(sym) => {
                    i += sym.len();
                    col += sym.len();
                    out.push(Token { tok: Tok::Sym(sym), line, col: start_col });
                }
                None => {
                    return Err(Error::Syntax {
                        line,
                        col,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
        out.push(Token { tok: Tok::Eof, line, col });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        Lexer::tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn splits_compound_symbols() {
        assert_eq!(
            toks("{a} ||| {b}"),
            vec![
                Tok::Sym("{"),
                Tok::Ident("a".into()),
                Tok::Sym("}"),
                Tok::Sym("|||"),
                Tok::Sym("{"),
                Tok::Ident("b".into()),
                Tok::Sym("}"),
                Tok::Eof
            ]
        );
        assert_eq!(toks("x |-> -")[1], Tok::Sym("|->"));
        assert_eq!(toks("0.25")[0], Tok::Decimal("0.25".into()));
        assert_eq!(toks("1/3")[1], Tok::Sym("/"));
    }

    #[test]
    fn reports_position_of_bad_character() {
        match Lexer::tokenize("x := 1\n  y := @") {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn skips_comments() {
        assert_eq!(toks("# note\nskip // trailing"), vec![Tok::Ident("skip".into()), Tok::Eof]);
    }
}
