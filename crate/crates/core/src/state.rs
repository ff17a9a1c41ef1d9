//! Plain-text database states.
//!
//! ```text
//! # comment
//! set s = {1, 2}
//! rel r = {(1, 2), (3, 4)}
//! set e : bool = {}
//! rel q : int <-> bool = {}
//! ```
//!
//! Element kinds are read off the elements; an empty collection needs an
//! explicit kind annotation.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_bigint::BigInt;
use thiserror::Error;

use crate::eb::{EbType, TypeEnv};
use crate::model::{is_primed, Database, Relation, Scalar, ScalarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct StateError {
    pub line: usize,
    pub message: String,
}

/// A parsed state file: the tables and their declared types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct State {
    pub db: Database,
    pub env: TypeEnv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Punct(&'static str),
}

const PUNCT: [&str; 8] = ["<->", "{", "}", "(", ")", ",", "=", ":"];

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
        } else if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) {
            out.push(Tok::Punct(p));
            rest = &rest[p.len()..];
        } else if c.is_ascii_digit()
            || (c == '-' && rest[1..].starts_with(|d: char| d.is_ascii_digit()))
        {
            let end = rest[1..]
                .find(|d: char| !d.is_ascii_digit())
                .map_or(rest.len(), |i| i + 1);
            out.push(Tok::Int(rest[..end].parse().expect("digits")));
            rest = &rest[end..];
        } else if c.is_ascii_alphabetic() || c == '_' {
            let end = rest
                .find(|d: char| !(d.is_ascii_alphanumeric() || d == '_'))
                .unwrap_or(rest.len());
            out.push(Tok::Ident(rest[..end].to_string()));
            rest = &rest[end..];
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Line {
    toks: Vec<Tok>,
    pos: usize,
}

impl Line {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn punct(&mut self, p: &str) -> Result<(), String> {
        match self.next() {
            Some(Tok::Punct(q)) if q == p => Ok(()),
            other => Err(format!(
                "expected `{p}`, found {}",
                describe(other.as_ref())
            )),
        }
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(format!(
                "expected a name, found {}",
                describe(other.as_ref())
            )),
        }
    }

    fn kind(&mut self) -> Result<ScalarKind, String> {
        match self.ident()?.as_str() {
            "int" => Ok(ScalarKind::Int),
            "bool" => Ok(ScalarKind::Bool),
            other => Err(format!("unknown element kind `{other}`")),
        }
    }

    fn scalar(&mut self) -> Result<Scalar, String> {
        match self.next() {
            Some(Tok::Int(i)) => Ok(Scalar::Int(i)),
            Some(Tok::Ident(s)) if s == "true" => Ok(Scalar::Bool(true)),
            Some(Tok::Ident(s)) if s == "false" => Ok(Scalar::Bool(false)),
            other => Err(format!(
                "expected an element, found {}",
                describe(other.as_ref())
            )),
        }
    }

    fn pair(&mut self) -> Result<(Scalar, Scalar), String> {
        self.punct("(")?;
        let a = self.scalar()?;
        self.punct(",")?;
        let b = self.scalar()?;
        self.punct(")")?;
        Ok((a, b))
    }

    /// `{ item, item, ... }`
    fn items<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, String>,
    ) -> Result<Vec<T>, String> {
        self.punct("{")?;
        let mut out = Vec::new();
        if self.eat("}") {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat("}") {
                return Ok(out);
            }
            self.punct(",")?;
        }
    }
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of line".into(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Int(i)) => format!("`{i}`"),
        Some(Tok::Punct(p)) => format!("`{p}`"),
    }
}

fn uniform_kind(
    xs: impl IntoIterator<Item = ScalarKind>,
    declared: Option<ScalarKind>,
) -> Result<Option<ScalarKind>, String> {
    let mut kind = declared;
    for k in xs {
        match kind {
            Some(expected) if expected != k => {
                return Err(format!("mixed element kinds {expected} and {k}"));
            }
            _ => kind = Some(k),
        }
    }
    Ok(kind)
}

fn parse_line(line: &mut Line, state: &mut State) -> Result<(), String> {
    let keyword = line.ident()?;
    let name = line.ident()?;
    if is_primed(&name) {
        return Err(format!("`{name}` uses the reserved suffix"));
    }
    if state.env.contains_key(&name) {
        return Err(format!("`{name}` is declared twice"));
    }
    let (rel, ty) = match keyword.as_str() {
        "set" => {
            let declared = if line.eat(":") {
                Some(line.kind()?)
            } else {
                None
            };
            line.punct("=")?;
            let xs = line.items(Line::scalar)?;
            let kind = uniform_kind(xs.iter().map(Scalar::kind), declared)?.ok_or_else(|| {
                format!("empty set `{name}` needs a kind, as in `set {name} : int = {{}}`")
            })?;
            let set: BTreeSet<Scalar> = xs.into_iter().collect();
            (Relation::set_table(set), EbType::Set(kind))
        }
        "rel" => {
            let declared = if line.eat(":") {
                let a = line.kind()?;
                line.punct("<->")?;
                Some((a, line.kind()?))
            } else {
                None
            };
            line.punct("=")?;
            let ps = line.items(Line::pair)?;
            let dom = uniform_kind(ps.iter().map(|p| p.0.kind()), declared.map(|d| d.0))?;
            let ran = uniform_kind(ps.iter().map(|p| p.1.kind()), declared.map(|d| d.1))?;
            let (Some(dom), Some(ran)) = (dom, ran) else {
                return Err(format!(
                    "empty relation `{name}` needs kinds, as in `rel {name} : int <-> int = {{}}`"
                ));
            };
            (Relation::pair_table(ps), EbType::Rel(dom, ran))
        }
        other => return Err(format!("expected `set` or `rel`, found `{other}`")),
    };
    if let Some(t) = line.peek() {
        return Err(format!("unexpected {} after the value", describe(Some(t))));
    }
    state.db = state.db.update(name.clone(), rel);
    state.env.insert(name, ty);
    Ok(())
}

pub fn read_state(text: &str) -> Result<State, StateError> {
    let mut state = State::default();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message| StateError {
            line: i + 1,
            message,
        };
        let toks = lex(content).map_err(err)?;
        parse_line(&mut Line { toks, pos: 0 }, &mut state).map_err(err)?;
    }
    Ok(state)
}

/// Renders `db` in the format read by [`read_state`]. Kind annotations are
/// written for empty collections only, taken from `env` (default `int`).
pub fn write_state(db: &Database, env: &TypeEnv) -> String {
    let mut out = String::new();
    for (name, rel) in db.iter() {
        let ty = env.get(name).copied();
        if rel.is_pair_table() || matches!(ty, Some(EbType::Rel(..))) && rel.is_empty() {
            let pairs = crate::model::relation_as_pairs(rel).unwrap_or_default();
            write!(out, "rel {name}").unwrap();
            if pairs.is_empty() {
                let (a, b) = match ty {
                    Some(EbType::Rel(a, b)) => (a, b),
                    _ => (ScalarKind::Int, ScalarKind::Int),
                };
                write!(out, " : {a} <-> {b}").unwrap();
            }
            let items: Vec<_> = pairs.iter().map(|(a, b)| format!("({a}, {b})")).collect();
            writeln!(out, " = {{{}}}", items.join(", ")).unwrap();
        } else {
            let set = crate::model::relation_as_set(rel).unwrap_or_default();
            write!(out, "set {name}").unwrap();
            if set.is_empty() {
                let k = match ty {
                    Some(EbType::Set(k)) => k,
                    _ => ScalarKind::Int,
                };
                write!(out, " : {k}").unwrap();
            }
            let items: Vec<_> = set.iter().map(|x| x.to_string()).collect();
            writeln!(out, " = {{{}}}", items.join(", ")).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_sets_and_relations() {
        let text = "# initial\nset s = {1, 2}\nrel r = {(1, true), (-3, false)}  # trailing\n\nset e : bool = {}\nrel q : int <-> bool = {}\n";
        let st = read_state(text).unwrap();
        assert_eq!(st.env["s"], EbType::Set(ScalarKind::Int));
        assert_eq!(st.env["r"], EbType::Rel(ScalarKind::Int, ScalarKind::Bool));
        assert_eq!(st.env["e"], EbType::Set(ScalarKind::Bool));
        assert_eq!(st.env["q"], EbType::Rel(ScalarKind::Int, ScalarKind::Bool));
        assert_eq!(st.db.get("s").unwrap().len(), 2);
        assert!(st.db.get("q").unwrap().is_pair_table());
        assert!(st.db.get("e").unwrap().is_set_table());
    }

    #[test]
    fn round_trip() {
        let text = "rel q : int <-> bool = {}\nrel r = {(-3, false), (1, true)}\nset e : bool = {}\nset s = {1, 2}\n";
        let st = read_state(text).unwrap();
        let written = write_state(&st.db, &st.env);
        assert_eq!(read_state(&written).unwrap(), st);
        assert_eq!(
            written,
            "set e : bool = {}\nrel q : int <-> bool = {}\nrel r = {(-3, false), (1, true)}\nset s = {1, 2}\n"
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read_state("set s = {1}\nset t = {}\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(read_state("set s = {1, true}").is_err());
        assert!(read_state("set s = {1}\nset s = {2}").is_err());
        assert!(read_state("set s__prime = {1}").is_err());
        assert!(read_state("bag s = {1}").is_err());
        assert!(read_state("set s = {1} 2").is_err());
        assert!(read_state("rel r : int <-> int = {(1, true)}").is_err());
    }

    #[test]
    fn duplicates_collapse() {
        let st = read_state("set s = {1, 1, 2}").unwrap();
        assert_eq!(st.db.get("s").unwrap().len(), 2);
    }
}
