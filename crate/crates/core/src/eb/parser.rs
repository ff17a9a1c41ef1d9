//! Parser for the Rodin-style ASCII surface syntax.
//!
//! ```text
//! actions := [assign {"||" assign}]
//! assign  := IDENT ":=" expr
//! pred    := pred "or" pred | pred "&" pred | "not" pred
//!          | expr ("=" | ":" | "<:" | "<<:") expr | "(" pred ")"
//! ```
//!
//! Expression operators, loosest to tightest: `\/ \`, `/\`, `**`,
//! `<| <<| |> |>>`, `; circ <+`, then postfix `~` and `[s]`. All infix
//! operators are left-associative.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use super::ast::{ActionSet, Assignment, BinOp, DuplicateTarget, Expr, Formula, Pred, UnOp};
use crate::model::{Scalar, PRIME_SUFFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at byte {}: expected {}, found {}",
            self.position,
            self.expected.join(" or "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionsError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    DuplicateTarget(#[from] DuplicateTarget),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    True,
    False,
    Or,
    Not,
    Card,
    Dom,
    Ran,
    Circ,
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::True => f.write_str("`true`"),
            Tok::False => f.write_str("`false`"),
            Tok::Or => f.write_str("`or`"),
            Tok::Not => f.write_str("`not`"),
            Tok::Card => f.write_str("`card`"),
            Tok::Dom => f.write_str("`dom`"),
            Tok::Ran => f.write_str("`ran`"),
            Tok::Circ => f.write_str("`circ`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

// Longest first so that prefixes never shadow longer operators.
const SYMBOLS: &[&str] = &[
    "<<|", "|>>", "|->", "<<:", "\\/", "/\\", "**", "<|", "|>", "<+", "<:", ":=", "||", "\\", ";",
    "~", "[", "]", ":", "=", "&", "(", ")", "{", "}", ",",
];

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let neg_int = c == b'-' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit);
        if c.is_ascii_digit() || neg_int {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let v: BigInt = src[start..i].parse().expect("lexed digits");
            out.push((start, Tok::Int(v)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            let tok = match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "card" => Tok::Card,
                "dom" => Tok::Dom,
                "ran" => Tok::Ran,
                "circ" => Tok::Circ,
                _ => {
                    if word.ends_with(PRIME_SUFFIX) {
                        return Err(ParseError {
                            position: start,
                            expected: vec![format!("identifier not ending in `{PRIME_SUFFIX}`")],
                            found: format!("reserved identifier `{word}`"),
                        });
                    }
                    Tok::Ident(word.to_string())
                }
            };
            out.push((start, tok));
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                out.push((start, Tok::Sym(s)));
                i += s.len();
            }
            None => {
                let ch = src[i..].chars().next().expect("in bounds");
                return Err(ParseError {
                    position: start,
                    expected: vec!["a token".into()],
                    found: format!("character `{ch}`"),
                });
            }
        }
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

fn infix(tok: &Tok) -> Option<BinOp> {
    Some(match tok {
        Tok::Sym("\\/") => BinOp::Union,
        Tok::Sym("\\") => BinOp::Diff,
        Tok::Sym("/\\") => BinOp::Inter,
        Tok::Sym("**") => BinOp::CProd,
        Tok::Sym("<|") => BinOp::DomRes,
        Tok::Sym("<<|") => BinOp::DomSub,
        Tok::Sym("|>") => BinOp::RanRes,
        Tok::Sym("|>>") => BinOp::RanSub,
        Tok::Sym(";") => BinOp::FComp,
        Tok::Circ => BinOp::BComp,
        Tok::Sym("<+") => BinOp::Ovl,
        _ => return None,
    })
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.error(&[&format!("`{sym}`")])
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn as_pred(&self, f: Formula, at: usize) -> Result<Pred, ParseError> {
        match f {
            Formula::Pred(p) => Ok(p),
            Formula::Expr(e) => Err(ParseError {
                position: at,
                expected: vec!["predicate".into()],
                found: format!("expression `{e}`"),
            }),
        }
    }

    fn as_expr(&self, f: Formula, at: usize) -> Result<Expr, ParseError> {
        match f {
            Formula::Expr(e) => Ok(e),
            Formula::Pred(p) => Err(ParseError {
                position: at,
                expected: vec!["expression".into()],
                found: format!("predicate `{p}`"),
            }),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            let l = self.as_pred(lhs, at)?;
            self.bump();
            let rat = self.offset();
            let r = self.conjunction()?;
            let r = self.as_pred(r, rat)?;
            lhs = Formula::Pred(Pred::or(l, r));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let mut lhs = self.negation()?;
        while self.eat("&") {
            let l = self.as_pred(lhs, at)?;
            let rat = self.offset();
            let r = self.negation()?;
            let r = self.as_pred(r, rat)?;
            lhs = Formula::Pred(Pred::and(l, r));
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            let at = self.offset();
            let inner = self.negation()?;
            let p = self.as_pred(inner, at)?;
            return Ok(Formula::Pred(Pred::not(p)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let lhs = self.infix_expr(1)?;
        let ctor: fn(Expr, Expr) -> Pred = match self.peek() {
            Tok::Sym("=") => Pred::Eq,
            Tok::Sym(":") => Pred::In,
            Tok::Sym("<:") => Pred::SubsetEq,
            Tok::Sym("<<:") => Pred::Subset,
            _ => return Ok(lhs),
        };
        let l = self.as_expr(lhs, at)?;
        self.bump();
        let rat = self.offset();
        let r = self.infix_expr(1)?;
        let r = self.as_expr(r, rat)?;
        Ok(Formula::Pred(ctor(l, r)))
    }

    fn infix_expr(&mut self, min_prec: u8) -> Result<Formula, ParseError> {
        let at = self.offset();
        let mut lhs = self.postfix()?;
        while let Some(op) = infix(self.peek()) {
            let p = op.precedence();
            if p < min_prec {
                break;
            }
            let l = self.as_expr(lhs, at)?;
            self.bump();
            let rat = self.offset();
            let r = self.infix_expr(p + 1)?;
            let r = self.as_expr(r, rat)?;
            lhs = Formula::Expr(Expr::binary(op, l, r));
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let mut base = self.atom()?;
        loop {
            if self.eat("~") {
                let e = self.as_expr(base, at)?;
                base = Formula::Expr(Expr::inverse(e));
            } else if self.eat("[") {
                let e = self.as_expr(base, at)?;
                let sat = self.offset();
                let s = self.infix_expr(1)?;
                let s = self.as_expr(s, sat)?;
                self.expect("]")?;
                base = Formula::Expr(Expr::binary(BinOp::Image, e, s));
            } else {
                return Ok(base);
            }
        }
    }

    fn scalar(&mut self) -> Result<Scalar, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Scalar::Int(i))
            }
            Tok::True => {
                self.bump();
                Ok(Scalar::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Scalar::Bool(false))
            }
            _ => self.error(&["integer", "`true`", "`false`"]),
        }
    }

    fn literal(&mut self) -> Result<Expr, ParseError> {
        if self.eat("}") {
            return Ok(Expr::SetLit(Vec::new()));
        }
        let first = self.scalar()?;
        if self.eat("|->") {
            let mut pairs = vec![(first, self.scalar()?)];
            while self.eat(",") {
                let k = self.scalar()?;
                self.expect("|->")?;
                pairs.push((k, self.scalar()?));
            }
            self.expect("}")?;
            Ok(Expr::RelLit(pairs))
        } else {
            let mut elems = vec![first];
            while self.eat(",") {
                elems.push(self.scalar()?);
            }
            self.expect("}")?;
            Ok(Expr::SetLit(elems))
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let tok = self.peek().clone();
        let expr = match tok {
            Tok::Ident(name) => {
                self.bump();
                Expr::Var(name)
            }
            Tok::Int(i) => {
                self.bump();
                Expr::Int(i)
            }
            Tok::True => {
                self.bump();
                Expr::Bool(true)
            }
            Tok::False => {
                self.bump();
                Expr::Bool(false)
            }
            Tok::Card | Tok::Dom | Tok::Ran => {
                self.bump();
                let op = match tok {
                    Tok::Card => UnOp::Card,
                    Tok::Dom => UnOp::Dom,
                    _ => UnOp::Ran,
                };
                self.expect("(")?;
                let at = self.offset();
                let inner = self.infix_expr(1)?;
                let inner = self.as_expr(inner, at)?;
                self.expect(")")?;
                Expr::unary(op, inner)
            }
            Tok::Sym("{") => {
                self.bump();
                self.literal()?
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.formula()?;
                self.expect(")")?;
                return Ok(inner);
            }
            _ => {
                return self.error(&[
                    "identifier",
                    "literal",
                    "`card`",
                    "`dom`",
                    "`ran`",
                    "`{`",
                    "`(`",
                ])
            }
        };
        Ok(Formula::Expr(expr))
    }
}

/// Parses an expression or predicate.
pub fn parse_expr(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parses `v1 := E1 || v2 := E2 || ...`. Blank input is the empty action set.
pub fn parse_actions(text: &str) -> Result<ActionSet, ActionsError> {
    let mut p = Parser::new(text)?;
    let mut assignments = Vec::new();
    if *p.peek() != Tok::Eof {
        loop {
            let target = match p.peek().clone() {
                Tok::Ident(name) => {
                    p.bump();
                    name
                }
                _ => return Err(p.error::<()>(&["identifier"]).unwrap_err().into()),
            };
            p.expect(":=")?;
            let at = p.offset();
            let rhs = p.infix_expr(1)?;
            let rhs = p.as_expr(rhs, at)?;
            assignments.push(Assignment::new(target, rhs));
            if !p.eat("||") {
                break;
            }
        }
    }
    p.expect_eof()?;
    Ok(ActionSet::new(assignments)?)
}
