//! SQL text emission.
//!
//! Output is lower-case, single-spaced, with parenthesized subqueries. A
//! column is renamed with `as` only when its exposed name differs from the
//! attribute it reads. Booleans are emitted as `1` / `0`.

use std::fmt::{self, Write};
use std::str::FromStr;

use super::ast::{Column, Source, SqlExpr, SqlPred, SqlQuery, SqlStatement, SqlTerm, TableSource};
use crate::model::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Dialect {
    #[default]
    MySql,
    Sqlite,
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mysql" => Ok(Dialect::MySql),
            "sqlite" => Ok(Dialect::Sqlite),
            other => Err(format!(
                "unknown dialect `{other}` (expected mysql or sqlite)"
            )),
        }
    }
}

impl fmt::Display for SqlTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqlTerm::Col { alias, attr } => write!(f, "{alias}.{attr}"),
            SqlTerm::Lit(Scalar::Int(i)) => write!(f, "{i}"),
            SqlTerm::Lit(Scalar::Bool(b)) => f.write_str(if *b { "1" } else { "0" }),
            SqlTerm::Scalar(q) => write!(f, "({q})"),
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term)?;
        match &self.term {
            SqlTerm::Col { attr, .. } if *attr == self.name => Ok(()),
            _ => write!(f, " as {}", self.name),
        }
    }
}

impl fmt::Display for TableSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Table(name) => write!(f, "{name} {}", self.alias),
            Source::Derived(q) => write!(f, "({q}) {}", self.alias),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqlQuery::Select(s) => {
                f.write_str("select ")?;
                if s.distinct {
                    f.write_str("distinct ")?;
                }
                write_list(f, &s.columns)?;
                if !s.from.is_empty() {
                    f.write_str(" from ")?;
                    write_list(f, &s.from)?;
                }
                if s.filter != SqlPred::True {
                    write!(f, " where {}", s.filter)?;
                }
                Ok(())
            }
            SqlQuery::Union(l, r) => write!(f, "{l} union {r}"),
            SqlQuery::Count { column, from } => write!(f, "select count({column}) from {from}"),
        }
    }
}

fn write_row(f: &mut fmt::Formatter<'_>, terms: &[SqlTerm]) -> fmt::Result {
    if terms.len() == 1 {
        write!(f, "{}", terms[0])
    } else {
        f.write_str("(")?;
        write_list(f, terms)?;
        f.write_str(")")
    }
}

impl SqlPred {
    fn is_junction(&self) -> bool {
        matches!(self, SqlPred::And(..) | SqlPred::Or(..))
    }
}

impl fmt::Display for SqlPred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqlPred::True => f.write_str("1 = 1"),
            SqlPred::Not(p) if p.is_junction() => write!(f, "not ({p})"),
            SqlPred::Not(p) => write!(f, "not {p}"),
            SqlPred::And(a, b) => {
                for (i, p) in [a, b].into_iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    if matches!(**p, SqlPred::Or(..)) {
                        write!(f, "({p})")?;
                    } else {
                        write!(f, "{p}")?;
                    }
                }
                Ok(())
            }
            SqlPred::Or(a, b) => write!(f, "{a} or {b}"),
            SqlPred::Compare(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
            SqlPred::In(terms, q) => {
                write_row(f, terms)?;
                write!(f, " in ({q})")
            }
            SqlPred::NotIn(terms, q) => {
                write_row(f, terms)?;
                write!(f, " not in ({q})")
            }
        }
    }
}

impl fmt::Display for SqlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SqlExpr::Query(q) => write!(f, "{q}"),
            SqlExpr::Pred(p) => write!(f, "{p}"),
            SqlExpr::Term(t) => write!(f, "{t}"),
        }
    }
}

pub fn emit_query(q: &SqlQuery) -> String {
    q.to_string()
}

pub fn emit_statement(st: &SqlStatement, dialect: Dialect) -> String {
    let ignore = match dialect {
        Dialect::MySql => "insert ignore into",
        Dialect::Sqlite => "insert or ignore into",
    };
    match st {
        SqlStatement::InsertIgnore { table, query } => format!("{ignore} {table} {query}"),
        SqlStatement::Insert { table, query } => format!("insert into {table} {query}"),
        SqlStatement::DeleteAll { table } => format!("delete from {table}"),
        SqlStatement::DeleteWhere { table, filter } => {
            format!("delete from {table} where {filter}")
        }
    }
}

/// Each statement terminated by `;`, one per line.
pub fn emit_statements(sts: &[SqlStatement], dialect: Dialect) -> String {
    let mut out = String::new();
    for (i, st) in sts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write!(out, "{};", emit_statement(st, dialect)).expect("writing to a String");
    }
    out
}
