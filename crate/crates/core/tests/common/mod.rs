#![allow(dead_code)]

use ebsql_core::eb::{parse_actions, parse_expr, EbType, TypeEnv};
use ebsql_core::model::ScalarKind;
use ebsql_core::sql::{emit_statements, Dialect};
use ebsql_core::translate::{eb2sql_actions, eb2sql_expr, TranslateOptions};
use regex::Regex;

pub fn env() -> TypeEnv {
    let mut e = TypeEnv::new();
    for n in ["s", "s1", "s2"] {
        e.insert(n.into(), EbType::Set(ScalarKind::Int));
    }
    for n in ["r", "r1", "r2"] {
        e.insert(n.into(), EbType::Rel(ScalarKind::Int, ScalarKind::Int));
    }
    e
}

/// Drops alias numbering, output-column renames and statement terminators,
/// and writes primed tables as `v'`.
pub fn normalize(sql: &str) -> String {
    let digits = Regex::new(r"tmp\d+").unwrap();
    let renames = Regex::new(r" as (refkey|id|value)\b").unwrap();
    let s = digits.replace_all(sql, "tmp");
    let s = renames.replace_all(&s, "");
    let s = s.replace("__prime", "'").replace(";\n", "; ");
    s.trim_end_matches(';')
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// The translation of a bare variable.
pub fn var(name: &str) -> String {
    if name.starts_with('r') {
        format!("(select rtmp.id, rtmp.value from {name} rtmp)")
    } else {
        format!("(select stmp.refkey from {name} stmp)")
    }
}

/// Fills `{name}` placeholders with the translation of that variable.
pub fn template(t: &str) -> String {
    let mut out = t.to_string();
    for v in ["s1", "s2", "r1", "r2", "s", "r"] {
        out = out.replace(&format!("{{{v}}}"), &var(v));
    }
    out
}

/// (expression, expected SQL with `{v}` placeholders)
pub const EXPR_GOLDENS: &[(&str, &str)] = &[
    ("card(s)", "select count(stmp.refkey) from {s} stmp"),
    ("s1 \\/ s2", "select s1tmp.refkey from {s1} s1tmp union select s2tmp.refkey from {s2} s2tmp"),
    ("s1 /\\ s2", "select s1tmp.refkey from {s1} s1tmp, {s2} s2tmp where s1tmp.refkey = s2tmp.refkey"),
    ("s1 ** s2", "select s1tmp.refkey, s2tmp.refkey from {s1} s1tmp, {s2} s2tmp"),
    ("s1 \\ s2", "select s1tmp.refkey from {s1} s1tmp where s1tmp.refkey not in (select s2tmp.refkey from {s2} s2tmp)"),
    ("dom(r)", "select distinct rtmp.id from {r} rtmp"),
    ("ran(r)", "select distinct rtmp.value from {r} rtmp"),
    ("s <| r", "select rtmp.id, rtmp.value from {r} rtmp, {s} stmp where rtmp.id = stmp.refkey"),
    ("s <<| r", "select rtmp.id, rtmp.value from {r} rtmp where rtmp.id not in (select stmp.refkey from {s} stmp)"),
    ("r |> s", "select rtmp.id, rtmp.value from {r} rtmp, {s} stmp where rtmp.value = stmp.refkey"),
    ("r |>> s", "select rtmp.id, rtmp.value from {r} rtmp where rtmp.value not in (select stmp.refkey from {s} stmp)"),
    ("r1 ; r2", "select distinct r1tmp.id, r2tmp.value from {r1} r1tmp, {r2} r2tmp where r1tmp.value = r2tmp.id"),
    ("r1 circ r2", "select distinct r1tmp.id, r2tmp.value from {r2} r1tmp, {r1} r2tmp where r1tmp.value = r2tmp.id"),
    ("r~", "select rtmp.value, rtmp.id from {r} rtmp"),
    ("r[s]", "select distinct rtmp.value from {r} rtmp, {s} stmp where rtmp.id = stmp.refkey"),
    (
        "r1 <+ r2",
        "select r1tmp.id, r1tmp.value from {r2} r1tmp union select r2tmp.id, r2tmp.value from \
         (select rtmp.id, rtmp.value from {r1} rtmp where rtmp.id not in \
         (select stmp.refkey from (select distinct rtmp.id from {r2} rtmp) stmp)) r2tmp",
    ),
    (
        "s1 <: s2",
        "(select count(stmp.refkey) from (select s1tmp.refkey from {s1} s1tmp, {s2} s2tmp \
         where s1tmp.refkey = s2tmp.refkey) stmp) = (select count(stmp.refkey) from {s1} stmp)",
    ),
    (
        "s1 = s2",
        "(select count(stmp.refkey) from (select s1tmp.refkey from {s1} s1tmp, {s2} s2tmp \
         where s1tmp.refkey = s2tmp.refkey) stmp) = (select count(stmp.refkey) from {s1} stmp) \
         and (select count(stmp.refkey) from {s1} stmp) = (select count(stmp.refkey) from {s2} stmp)",
    ),
    (
        "s1 <<: s2",
        "(select count(stmp.refkey) from (select s1tmp.refkey from {s1} s1tmp, {s2} s2tmp \
         where s1tmp.refkey = s2tmp.refkey) stmp) = (select count(stmp.refkey) from {s1} stmp) \
         and (select count(stmp.refkey) from {s1} stmp) <> (select count(stmp.refkey) from {s2} stmp)",
    ),
    (
        "1 : s",
        "(select count(stmp.refkey) from (select s1tmp.refkey from (select 1) s1tmp, {s} s2tmp \
         where s1tmp.refkey = s2tmp.refkey) stmp) = (select count(stmp.refkey) from (select 1) stmp)",
    ),
];

/// (assignment, expected statements, expected primed definition)
pub const ASSIGNMENT_GOLDENS: &[(&str, &str, &str)] = &[
    (
        "s := s \\/ s1",
        "insert ignore into s select stmp.refkey from s' stmp",
        "s1",
    ),
    (
        "s := s \\ s1",
        "delete from s where s.refkey in (select s1tmp.refkey from s' s1tmp)",
        "s1",
    ),
    (
        "s := s /\\ s1",
        "delete from s where s.refkey in (select s1tmp.refkey from s' s1tmp)",
        "s \\ s1",
    ),
    (
        "r := r <+ r1",
        "delete from r where r.id in (select r1tmp.id from r' r1tmp); \
         insert ignore into r select r2tmp.id, r2tmp.value from r' r2tmp",
        "r1",
    ),
    (
        "r := s1 <<| r",
        "delete from r where r.id in (select stmp.refkey from r' stmp)",
        "s1",
    ),
    (
        "r := s1 <| r",
        "delete from r where r.id in (select stmp.refkey from r' stmp)",
        "dom(r) \\ s1",
    ),
    (
        "r := r |>> s1",
        "delete from r where r.value in (select stmp.refkey from r' stmp)",
        "s1",
    ),
    (
        "r := r |> s1",
        "delete from r where r.value in (select stmp.refkey from r' stmp)",
        "ran(r) \\ s1",
    ),
    (
        "s := s1",
        "delete from s; insert ignore into s select s1tmp.refkey from s' s1tmp",
        "s1",
    ),
    (
        "r := r1",
        "delete from r; insert ignore into r select r1tmp.id, r1tmp.value from r' r1tmp",
        "r1",
    ),
];

/// Normalized `(actual, expected)` for an expression golden.
pub fn expr_golden(input: &str, expected: &str) -> (String, String) {
    let f = parse_expr(input).unwrap();
    let q = eb2sql_expr(&f, &env(), TranslateOptions::default()).unwrap();
    (normalize(&q.to_string()), normalize(&template(expected)))
}

/// Normalized `(actual, expected)` statements and the primed definition.
pub fn assignment_golden(input: &str, expected: &str) -> (String, String, String) {
    let a = parse_actions(input).unwrap();
    let ts = eb2sql_actions(&a, &env(), TranslateOptions::default()).unwrap();
    assert_eq!(ts.len(), 1);
    let sql = emit_statements(&ts[0].statements, Dialect::MySql);
    (
        normalize(&sql),
        normalize(expected),
        ts[0].primed_def.to_string(),
    )
}
