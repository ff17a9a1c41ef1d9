//! Reference evaluator for the SQL fragment.
//!
//! Queries are evaluated to bags (row lists) so that a missing `distinct`
//! shows up as duplicate rows instead of being absorbed by a set container.
//! `union` and `distinct` deduplicate; everything else keeps multiplicity.
//! From-clause entries are enumerated with nested loops and the where
//! predicate is checked on each complete binding.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use num_bigint::BigInt;
use thiserror::Error;

use super::ast::{CmpOp, Source, SqlExpr, SqlPred, SqlQuery, SqlStatement, SqlTerm, TableSource};
use crate::model::{Database, ModelError, Relation, Row, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("table `{0}` is not bound")]
    UnboundTable(String),
    #[error("unknown tuple variable `{0}`")]
    UnknownAlias(String),
    #[error("tuple variable `{alias}` has no attribute `{attr}`")]
    UnknownAttribute { alias: String, attr: String },
    #[error("{context}: expected {expected} columns, found {found}")]
    Arity {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("scalar subquery returned {rows} rows of {columns} columns")]
    NotScalar { rows: usize, columns: usize },
    #[error("cannot compare {left} {op} {right}")]
    Incomparable {
        op: &'static str,
        left: Scalar,
        right: Scalar,
    },
    #[error("query result has {rows} rows but only {distinct} distinct")]
    DuplicateRows { rows: usize, distinct: usize },
    #[error("duplicate row inserted into `{table}`")]
    DuplicateKey { table: String },
    #[error(transparent)]
    Schema(#[from] ModelError),
    #[error("statement {index}: {source}")]
    Statement {
        index: usize,
        #[source]
        source: Box<SqlError>,
    },
}

/// Counters gathered while evaluating; used to audit translator output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Query nodes evaluated (selects, unions, counts).
    pub queries: u64,
    /// Query nodes whose result held a repeated row, not counting the
    /// right operands of `in` / `not in`.
    pub duplicate_results: u64,
    /// Right operands of `in` / `not in` that held a repeated row. Membership
    /// ignores multiplicity, so these cannot change a result.
    pub membership_duplicates: u64,
    pub counts: u64,
    /// Count queries whose operand held a repeated row, so that `count`
    /// and `count distinct` would disagree.
    pub count_mismatches: u64,
}

impl EvalStats {
    pub fn merge(&mut self, other: &EvalStats) {
        self.queries += other.queries;
        self.duplicate_results += other.duplicate_results;
        self.membership_duplicates += other.membership_duplicates;
        self.counts += other.counts;
        self.count_mismatches += other.count_mismatches;
    }
}

/// Result of evaluating a translated formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SqlValue {
    Relation(Relation),
    Scalar(Scalar),
}

#[derive(Debug)]
struct Bag {
    schema: Vec<String>,
    rows: Vec<Vec<Scalar>>,
    members: BTreeSet<Vec<Scalar>>,
}

impl Bag {
    fn new(schema: Vec<String>, rows: Vec<Vec<Scalar>>) -> Self {
        let members = rows.iter().cloned().collect();
        Bag {
            schema,
            rows,
            members,
        }
    }

    fn from_relation(rel: &Relation) -> Self {
        let schema = rel.schema().to_vec();
        let rows = rel
            .rows()
            .map(|r| {
                schema
                    .iter()
                    .map(|a| r.get(a).expect("row matches schema").clone())
                    .collect()
            })
            .collect();
        Bag::new(schema, rows)
    }

    fn has_duplicates(&self) -> bool {
        self.members.len() != self.rows.len()
    }

    fn into_relation(self) -> Result<Relation, SqlError> {
        if self.has_duplicates() {
            return Err(SqlError::DuplicateRows {
                rows: self.rows.len(),
                distinct: self.members.len(),
            });
        }
        let rows = self
            .members
            .into_iter()
            .map(|vals| self.schema.iter().cloned().zip(vals).collect::<Row>())
            .collect::<Vec<_>>();
        Ok(Relation::from_rows(self.schema, rows)?)
    }
}

/// One tuple-variable binding; scopes chain outward.
struct Scope<'a> {
    alias: &'a str,
    schema: &'a [String],
    row: &'a [Scalar],
    parent: Option<&'a Scope<'a>>,
}

fn lookup<'a>(
    mut scope: Option<&'a Scope<'a>>,
    alias: &str,
    attr: &str,
) -> Result<&'a Scalar, SqlError> {
    while let Some(s) = scope {
        if s.alias == alias {
            return match s.schema.iter().position(|a| a == attr) {
                Some(i) => Ok(&s.row[i]),
                None => Err(SqlError::UnknownAttribute {
                    alias: alias.to_string(),
                    attr: attr.to_string(),
                }),
            };
        }
        scope = s.parent;
    }
    Err(SqlError::UnknownAlias(alias.to_string()))
}

/// Called once per complete from-clause binding.
type Visit<'db, 'f> = dyn FnMut(&mut Evaluator<'db>, Option<&Scope<'_>>) -> Result<(), SqlError> + 'f;

struct Evaluator<'db> {
    db: &'db Database,
    stats: EvalStats,
    /// Results of subqueries with no free tuple variables, keyed by node address.
    cache: HashMap<*const SqlQuery, Rc<Bag>>,
    closed: HashMap<*const SqlQuery, bool>,
}

impl<'db> Evaluator<'db> {
    fn new(db: &'db Database) -> Self {
        Evaluator {
            db,
            stats: EvalStats::default(),
            cache: HashMap::new(),
            closed: HashMap::new(),
        }
    }

    fn is_closed(&mut self, q: &SqlQuery) -> bool {
        let key = q as *const SqlQuery;
        if let Some(&c) = self.closed.get(&key) {
            return c;
        }
        let mut free = BTreeSet::new();
        free_in_query(q, &mut Vec::new(), &mut free);
        let c = free.is_empty();
        self.closed.insert(key, c);
        c
    }

    fn subquery(&mut self, q: &SqlQuery, scope: Option<&Scope<'_>>) -> Result<Rc<Bag>, SqlError> {
        self.subquery_as(q, scope, false)
    }

    fn subquery_as(
        &mut self,
        q: &SqlQuery,
        scope: Option<&Scope<'_>>,
        membership: bool,
    ) -> Result<Rc<Bag>, SqlError> {
        if !self.is_closed(q) {
            return Ok(Rc::new(self.query_as(q, scope, membership)?));
        }
        let key = q as *const SqlQuery;
        if let Some(b) = self.cache.get(&key) {
            return Ok(Rc::clone(b));
        }
        let b = Rc::new(self.query_as(q, None, membership)?);
        self.cache.insert(key, Rc::clone(&b));
        Ok(b)
    }

    fn query(&mut self, q: &SqlQuery, scope: Option<&Scope<'_>>) -> Result<Bag, SqlError> {
        self.query_as(q, scope, false)
    }

    fn query_as(
        &mut self,
        q: &SqlQuery,
        scope: Option<&Scope<'_>>,
        membership: bool,
    ) -> Result<Bag, SqlError> {
        let bag = match q {
            SqlQuery::Select(sel) => {
                let sources = sel
                    .from
                    .iter()
                    .map(|ts| self.source(ts, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut rows = Vec::new();
                self.enumerate(&sel.from, &sources, 0, scope, &mut |ev, s| {
                    if ev.pred(&sel.filter, s)? {
                        let row = sel
                            .columns
                            .iter()
                            .map(|c| ev.term(&c.term, s))
                            .collect::<Result<Vec<_>, _>>()?;
                        rows.push(row);
                    }
                    Ok(())
                })?;
                if sel.distinct {
                    let mut seen = BTreeSet::new();
                    rows.retain(|r| seen.insert(r.clone()));
                }
                Bag::new(q.output_schema(), rows)
            }
            SqlQuery::Union(l, r) => {
                let l = self.query(l, scope)?;
                let r = self.query(r, scope)?;
                if l.schema.len() != r.schema.len() {
                    return Err(SqlError::Arity {
                        context: "union",
                        expected: l.schema.len(),
                        found: r.schema.len(),
                    });
                }
                let mut seen = BTreeSet::new();
                let rows = l
                    .rows
                    .into_iter()
                    .chain(r.rows)
                    .filter(|row| seen.insert(row.clone()))
                    .collect();
                Bag::new(l.schema, rows)
            }
            SqlQuery::Count { column, from } => {
                let src = self.source(from, scope)?;
                let mut values = Vec::with_capacity(src.rows.len());
                for row in &src.rows {
                    let s = Scope {
                        alias: &from.alias,
                        schema: &src.schema,
                        row,
                        parent: scope,
                    };
                    values.push(self.term(column, Some(&s))?);
                }
                self.stats.counts += 1;
                if src.has_duplicates() {
                    self.stats.count_mismatches += 1;
                }
                let n = Scalar::Int(BigInt::from(values.len()));
                Bag::new(q.output_schema(), vec![vec![n]])
            }
        };
        self.stats.queries += 1;
        if bag.has_duplicates() {
            if membership {
                self.stats.membership_duplicates += 1;
            } else {
                self.stats.duplicate_results += 1;
            }
        }
        Ok(bag)
    }

    fn source(&mut self, ts: &TableSource, scope: Option<&Scope<'_>>) -> Result<Rc<Bag>, SqlError> {
        match &ts.source {
            Source::Table(name) => {
                let rel = self
                    .db
                    .get(name)
                    .map_err(|_| SqlError::UnboundTable(name.clone()))?;
                Ok(Rc::new(Bag::from_relation(rel)))
            }
            Source::Derived(q) => self.subquery(q, scope),
        }
    }

    fn enumerate(
        &mut self,
        from: &[TableSource],
        sources: &[Rc<Bag>],
        i: usize,
        scope: Option<&Scope<'_>>,
        visit: &mut Visit<'db, '_>,
    ) -> Result<(), SqlError> {
        if i == from.len() {
            return visit(self, scope);
        }
        let bag = &sources[i];
        for row in &bag.rows {
            let s = Scope {
                alias: &from[i].alias,
                schema: &bag.schema,
                row,
                parent: scope,
            };
            self.enumerate(from, sources, i + 1, Some(&s), visit)?;
        }
        Ok(())
    }

    fn term(&mut self, t: &SqlTerm, scope: Option<&Scope<'_>>) -> Result<Scalar, SqlError> {
        match t {
            SqlTerm::Col { alias, attr } => lookup(scope, alias, attr).cloned(),
            SqlTerm::Lit(v) => Ok(v.clone()),
            SqlTerm::Scalar(q) => {
                let bag = self.subquery(q, scope)?;
                if bag.rows.len() != 1 || bag.schema.len() != 1 {
                    return Err(SqlError::NotScalar {
                        rows: bag.rows.len(),
                        columns: bag.schema.len(),
                    });
                }
                Ok(bag.rows[0][0].clone())
            }
        }
    }

    fn pred(&mut self, p: &SqlPred, scope: Option<&Scope<'_>>) -> Result<bool, SqlError> {
        match p {
            SqlPred::True => Ok(true),
            SqlPred::Not(p) => Ok(!self.pred(p, scope)?),
            SqlPred::And(a, b) => Ok(self.pred(a, scope)? && self.pred(b, scope)?),
            SqlPred::Or(a, b) => Ok(self.pred(a, scope)? || self.pred(b, scope)?),
            SqlPred::Compare(l, op, r) => {
                let l = self.term(l, scope)?;
                let r = self.term(r, scope)?;
                compare(&l, *op, &r)
            }
            SqlPred::In(terms, q) => self.member(terms, q, scope),
            SqlPred::NotIn(terms, q) => Ok(!self.member(terms, q, scope)?),
        }
    }

    fn member(
        &mut self,
        terms: &[SqlTerm],
        q: &SqlQuery,
        scope: Option<&Scope<'_>>,
    ) -> Result<bool, SqlError> {
        let row = terms
            .iter()
            .map(|t| self.term(t, scope))
            .collect::<Result<Vec<_>, _>>()?;
        let bag = self.subquery_as(q, scope, true)?;
        if bag.schema.len() != row.len() {
            return Err(SqlError::Arity {
                context: "in",
                expected: row.len(),
                found: bag.schema.len(),
            });
        }
        Ok(bag.members.contains(&row))
    }
}

fn compare(l: &Scalar, op: CmpOp, r: &Scalar) -> Result<bool, SqlError> {
    match op {
        CmpOp::Eq => return Ok(l == r),
        CmpOp::Ne => return Ok(l != r),
        _ => {}
    }
    let (Scalar::Int(a), Scalar::Int(b)) = (l, r) else {
        return Err(SqlError::Incomparable {
            op: op.symbol(),
            left: l.clone(),
            right: r.clone(),
        });
    };
    Ok(match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
        CmpOp::Eq | CmpOp::Ne => unreachable!(),
    })
}

fn free_in_term(t: &SqlTerm, bound: &mut Vec<String>, free: &mut BTreeSet<String>) {
    match t {
        SqlTerm::Col { alias, .. } => {
            if !bound.contains(alias) {
                free.insert(alias.clone());
            }
        }
        SqlTerm::Lit(_) => {}
        SqlTerm::Scalar(q) => free_in_query(q, bound, free),
    }
}

fn free_in_pred(p: &SqlPred, bound: &mut Vec<String>, free: &mut BTreeSet<String>) {
    match p {
        SqlPred::True => {}
        SqlPred::Not(p) => free_in_pred(p, bound, free),
        SqlPred::And(a, b) | SqlPred::Or(a, b) => {
            free_in_pred(a, bound, free);
            free_in_pred(b, bound, free);
        }
        SqlPred::Compare(l, _, r) => {
            free_in_term(l, bound, free);
            free_in_term(r, bound, free);
        }
        SqlPred::In(ts, q) | SqlPred::NotIn(ts, q) => {
            for t in ts {
                free_in_term(t, bound, free);
            }
            free_in_query(q, bound, free);
        }
    }
}

fn free_in_query(q: &SqlQuery, bound: &mut Vec<String>, free: &mut BTreeSet<String>) {
    match q {
        SqlQuery::Select(sel) => {
            for ts in &sel.from {
                if let Source::Derived(d) = &ts.source {
                    free_in_query(d, bound, free);
                }
            }
            let mark = bound.len();
            bound.extend(sel.from.iter().map(|ts| ts.alias.clone()));
            for c in &sel.columns {
                free_in_term(&c.term, bound, free);
            }
            free_in_pred(&sel.filter, bound, free);
            bound.truncate(mark);
        }
        SqlQuery::Union(l, r) => {
            free_in_query(l, bound, free);
            free_in_query(r, bound, free);
        }
        SqlQuery::Count { column, from } => {
            if let Source::Derived(d) = &from.source {
                free_in_query(d, bound, free);
            }
            bound.push(from.alias.clone());
            free_in_term(column, bound, free);
            bound.pop();
        }
    }
}

fn rename_term(t: &SqlTerm, from: &str, to: &str) -> SqlTerm {
    match t {
        SqlTerm::Col { alias, attr } if alias == from => SqlTerm::col(to, attr.clone()),
        SqlTerm::Scalar(q) => SqlTerm::Scalar(Box::new(rename_query(q, from, to))),
        other => other.clone(),
    }
}

/// `[to/from]p`: replaces free occurrences of tuple variable `from`.
fn rename_pred(p: &SqlPred, from: &str, to: &str) -> SqlPred {
    match p {
        SqlPred::True => SqlPred::True,
        SqlPred::Not(p) => SqlPred::not(rename_pred(p, from, to)),
        SqlPred::And(a, b) => SqlPred::and(rename_pred(a, from, to), rename_pred(b, from, to)),
        SqlPred::Or(a, b) => SqlPred::or(rename_pred(a, from, to), rename_pred(b, from, to)),
        SqlPred::Compare(l, op, r) => {
            SqlPred::Compare(rename_term(l, from, to), *op, rename_term(r, from, to))
        }
        SqlPred::In(ts, q) => SqlPred::In(
            ts.iter().map(|t| rename_term(t, from, to)).collect(),
            Box::new(rename_query(q, from, to)),
        ),
        SqlPred::NotIn(ts, q) => SqlPred::NotIn(
            ts.iter().map(|t| rename_term(t, from, to)).collect(),
            Box::new(rename_query(q, from, to)),
        ),
    }
}

fn rename_source(ts: &TableSource, from: &str, to: &str) -> TableSource {
    match &ts.source {
        Source::Derived(d) => TableSource::derived(rename_query(d, from, to), ts.alias.clone()),
        Source::Table(_) => ts.clone(),
    }
}

fn rename_query(q: &SqlQuery, from: &str, to: &str) -> SqlQuery {
    match q {
        SqlQuery::Select(sel) => {
            let mut out = sel.clone();
            out.from = sel
                .from
                .iter()
                .map(|ts| rename_source(ts, from, to))
                .collect();
            if sel.from.iter().all(|ts| ts.alias != from) {
                for c in &mut out.columns {
                    c.term = rename_term(&c.term, from, to);
                }
                out.filter = rename_pred(&sel.filter, from, to);
            }
            SqlQuery::Select(out)
        }
        SqlQuery::Union(l, r) => SqlQuery::Union(
            Box::new(rename_query(l, from, to)),
            Box::new(rename_query(r, from, to)),
        ),
        SqlQuery::Count { column, from: src } => SqlQuery::Count {
            column: if src.alias == from {
                column.clone()
            } else {
                rename_term(column, from, to)
            },
            from: rename_source(src, from, to),
        },
    }
}

pub fn eval_query(q: &SqlQuery, db: &Database) -> Result<Relation, SqlError> {
    eval_query_with_stats(q, db, &mut EvalStats::default())
}

/// Like [`eval_query`], accumulating counters into `stats`.
pub fn eval_query_with_stats(
    q: &SqlQuery,
    db: &Database,
    stats: &mut EvalStats,
) -> Result<Relation, SqlError> {
    let mut ev = Evaluator::new(db);
    let bag = ev.query(q, None);
    stats.merge(&ev.stats);
    bag?.into_relation()
}

pub fn eval_pred(p: &SqlPred, db: &Database) -> Result<bool, SqlError> {
    Evaluator::new(db).pred(p, None)
}

pub fn eval_sql_expr(e: &SqlExpr, db: &Database) -> Result<SqlValue, SqlError> {
    eval_sql_expr_with_stats(e, db, &mut EvalStats::default())
}

pub fn eval_sql_expr_with_stats(
    e: &SqlExpr,
    db: &Database,
    stats: &mut EvalStats,
) -> Result<SqlValue, SqlError> {
    match e {
        SqlExpr::Query(q) => eval_query_with_stats(q, db, stats).map(SqlValue::Relation),
        SqlExpr::Pred(p) => {
            let mut ev = Evaluator::new(db);
            let v = ev.pred(p, None);
            stats.merge(&ev.stats);
            Ok(SqlValue::Scalar(Scalar::Bool(v?)))
        }
        SqlExpr::Term(t) => {
            let mut ev = Evaluator::new(db);
            let v = ev.term(t, None);
            stats.merge(&ev.stats);
            v.map(SqlValue::Scalar)
        }
    }
}

/// Alias used for the deleted-from table when rewriting a delete into a
/// difference; not a legal identifier, so it cannot capture.
const DELETE_ALIAS: &str = "#del";

fn insert_rows(
    db: &Database,
    table: &str,
    query: &SqlQuery,
    ignore: bool,
    stats: &mut EvalStats,
) -> Result<Database, SqlError> {
    let current = db
        .get(table)
        .map_err(|_| SqlError::UnboundTable(table.to_string()))?;
    let mut ev = Evaluator::new(db);
    let bag = ev.query(query, None);
    stats.merge(&ev.stats);
    let bag = bag?;
    let schema = current.schema().to_vec();
    if bag.schema.len() != schema.len() {
        return Err(SqlError::Arity {
            context: "insert",
            expected: schema.len(),
            found: bag.schema.len(),
        });
    }
    let mut next = current.clone();
    for vals in bag.rows {
        let row: Row = schema.iter().cloned().zip(vals).collect();
        if !next.insert(row)? && !ignore {
            return Err(SqlError::DuplicateKey {
                table: table.to_string(),
            });
        }
    }
    Ok(db.update(table, next))
}

pub fn exec_statement(st: &SqlStatement, db: &Database) -> Result<Database, SqlError> {
    exec_statement_with_stats(st, db, &mut EvalStats::default())
}

pub fn exec_statement_with_stats(
    st: &SqlStatement,
    db: &Database,
    stats: &mut EvalStats,
) -> Result<Database, SqlError> {
    match st {
        SqlStatement::InsertIgnore { table, query } => insert_rows(db, table, query, true, stats),
        SqlStatement::Insert { table, query } => insert_rows(db, table, query, false, stats),
        SqlStatement::DeleteAll { table } => {
            let current = db
                .get(table)
                .map_err(|_| SqlError::UnboundTable(table.clone()))?;
            Ok(db.update(table.clone(), current.cleared()))
        }
        SqlStatement::DeleteWhere { table, filter } => {
            let current = db
                .get(table)
                .map_err(|_| SqlError::UnboundTable(table.clone()))?;
            // db(r) minus `select rtmp.A.. from r rtmp where [rtmp/r]filter`
            let doomed = SqlQuery::Select(super::ast::Select {
                distinct: false,
                columns: current
                    .schema()
                    .iter()
                    .map(|a| {
                        super::ast::Column::new(SqlTerm::col(DELETE_ALIAS, a.clone()), a.clone())
                    })
                    .collect(),
                from: vec![TableSource::table(table.clone(), DELETE_ALIAS)],
                filter: rename_pred(filter, table, DELETE_ALIAS),
            });
            let doomed = eval_query_with_stats(&doomed, db, stats)?;
            let mut next = current.clone();
            next.retain(|r| !doomed.contains(r));
            Ok(db.update(table.clone(), next))
        }
    }
}

/// Runs statements left to right; an error reports the failing index.
pub fn exec_sequence(sts: &[SqlStatement], db: &Database) -> Result<Database, SqlError> {
    exec_sequence_with_stats(sts, db, &mut EvalStats::default())
}

pub fn exec_sequence_with_stats(
    sts: &[SqlStatement],
    db: &Database,
    stats: &mut EvalStats,
) -> Result<Database, SqlError> {
    sts.iter()
        .enumerate()
        .try_fold(db.clone(), |db, (index, st)| {
            exec_statement_with_stats(st, &db, stats).map_err(|e| SqlError::Statement {
                index,
                source: Box::new(e),
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{relation_as_pairs, relation_as_set, REFKEY};
    use crate::sql::ast::{Column, Select};

    fn ints(v: &[i64]) -> BTreeSet<Scalar> {
        v.iter().map(|&i| Scalar::int(i)).collect()
    }

    fn set_db(tables: &[(&str, &[i64])]) -> Database {
        tables
            .iter()
            .map(|(n, v)| (n.to_string(), Relation::set_table(ints(v))))
            .collect()
    }

    fn select(alias: &str, table: &str, filter: SqlPred) -> SqlQuery {
        SqlQuery::Select(Select {
            distinct: false,
            columns: vec![Column::new(SqlTerm::col(alias, REFKEY), REFKEY)],
            from: vec![TableSource::table(table, alias)],
            filter,
        })
    }

    #[test]
    fn base_select() {
        let db = set_db(&[("s", &[1, 2])]);
        let r = eval_query(&select("stmp", "s", SqlPred::True), &db).unwrap();
        assert_eq!(relation_as_set(&r).unwrap(), ints(&[1, 2]));
    }

    #[test]
    fn count_of_empty_is_zero() {
        let db = set_db(&[("s", &[])]);
        let q = SqlQuery::Count {
            column: SqlTerm::col("stmp", REFKEY),
            from: TableSource::table("s", "stmp"),
        };
        let r = eval_query(&q, &db).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.rows().next().unwrap().get("count"), Some(&Scalar::int(0)));
    }

    #[test]
    fn not_in_subquery() {
        let db = set_db(&[("s", &[1, 2, 3]), ("t", &[2])]);
        let q = select(
            "s1tmp",
            "s",
            SqlPred::NotIn(
                vec![SqlTerm::col("s1tmp", REFKEY)],
                Box::new(select("s2tmp", "t", SqlPred::True)),
            ),
        );
        let r = eval_query(&q, &db).unwrap();
        // every row of s, kept when absent from t
        let oracle: BTreeSet<_> = [1, 2, 3]
            .into_iter()
            .filter(|x| *x != 2)
            .collect::<Vec<_>>()
            .iter()
            .map(|&i| Scalar::int(i))
            .collect();
        assert_eq!(relation_as_set(&r).unwrap(), oracle);
    }

    #[test]
    fn union_removes_duplicates() {
        let db = set_db(&[("a", &[1, 2]), ("b", &[2, 3])]);
        let q = SqlQuery::Union(
            Box::new(select("x", "a", SqlPred::True)),
            Box::new(select("y", "b", SqlPred::True)),
        );
        let mut stats = EvalStats::default();
        let r = eval_query_with_stats(&q, &db, &mut stats).unwrap();
        assert_eq!(relation_as_set(&r).unwrap(), ints(&[1, 2, 3]));
        assert_eq!(stats.duplicate_results, 0);
    }

    #[test]
    fn bag_duplicates_are_reported() {
        let db = set_db(&[("a", &[1, 2])]);
        let mut sel = Select {
            distinct: false,
            columns: vec![Column::new(SqlTerm::Lit(Scalar::int(7)), REFKEY)],
            from: vec![TableSource::table("a", "x")],
            filter: SqlPred::True,
        };
        let mut stats = EvalStats::default();
        let err =
            eval_query_with_stats(&SqlQuery::Select(sel.clone()), &db, &mut stats).unwrap_err();
        assert_eq!(
            err,
            SqlError::DuplicateRows {
                rows: 2,
                distinct: 1
            }
        );
        assert_eq!(stats.duplicate_results, 1);
        sel.distinct = true;
        let r = eval_query(&SqlQuery::Select(sel), &db).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn membership_operand_duplicates_counted_apart() {
        let db = set_db(&[("a", &[1, 2])]);
        let ones = SqlQuery::Select(Select {
            distinct: false,
            columns: vec![Column::new(SqlTerm::Lit(Scalar::int(1)), REFKEY)],
            from: vec![TableSource::table("a", "y")],
            filter: SqlPred::True,
        });
        let q = select(
            "x",
            "a",
            SqlPred::In(vec![SqlTerm::col("x", REFKEY)], Box::new(ones)),
        );
        let mut stats = EvalStats::default();
        let r = eval_query_with_stats(&q, &db, &mut stats).unwrap();
        assert_eq!(relation_as_set(&r).unwrap(), ints(&[1]));
        assert_eq!(stats.duplicate_results, 0);
        assert_eq!(stats.membership_duplicates, 1);
    }

    #[test]
    fn count_tracks_multiplicity() {
        let db = set_db(&[("a", &[1, 2, 3])]);
        let dup = SqlQuery::Select(Select {
            distinct: false,
            columns: vec![Column::new(SqlTerm::Lit(Scalar::int(0)), REFKEY)],
            from: vec![TableSource::table("a", "x")],
            filter: SqlPred::True,
        });
        let q = SqlQuery::Count {
            column: SqlTerm::col("c", REFKEY),
            from: TableSource::derived(dup, "c"),
        };
        let mut stats = EvalStats::default();
        let r = eval_query_with_stats(&q, &db, &mut stats).unwrap();
        assert_eq!(r.rows().next().unwrap().get("count"), Some(&Scalar::int(3)));
        assert_eq!(stats.count_mismatches, 1);
    }

    #[test]
    fn unbound_table() {
        let err = eval_query(&select("x", "nope", SqlPred::True), &Database::new()).unwrap_err();
        assert_eq!(err, SqlError::UnboundTable("nope".into()));
    }

    #[test]
    fn correlated_subquery_sees_outer_alias() {
        let db = set_db(&[("a", &[1, 2, 3]), ("b", &[2, 3, 4])]);
        let inner = select(
            "y",
            "b",
            SqlPred::eq(SqlTerm::col("y", REFKEY), SqlTerm::col("x", REFKEY)),
        );
        let q = select(
            "x",
            "a",
            SqlPred::In(vec![SqlTerm::col("x", REFKEY)], Box::new(inner)),
        );
        let r = eval_query(&q, &db).unwrap();
        assert_eq!(relation_as_set(&r).unwrap(), ints(&[2, 3]));
    }

    #[test]
    fn insert_ignore_is_union_and_idempotent() {
        let db = set_db(&[("s", &[1, 2]), ("t", &[2, 3])]);
        let st = SqlStatement::InsertIgnore {
            table: "s".into(),
            query: select("x", "t", SqlPred::True),
        };
        let once = exec_statement(&st, &db).unwrap();
        assert_eq!(
            relation_as_set(once.get("s").unwrap()).unwrap(),
            ints(&[1, 2, 3])
        );
        assert_eq!(once.get("t"), db.get("t"));
        assert_eq!(exec_statement(&st, &once).unwrap(), once);
    }

    #[test]
    fn plain_insert_rejects_present_rows() {
        let db = set_db(&[("s", &[1, 2]), ("t", &[2, 3])]);
        let st = SqlStatement::Insert {
            table: "s".into(),
            query: select("x", "t", SqlPred::True),
        };
        assert_eq!(
            exec_statement(&st, &db).unwrap_err(),
            SqlError::DuplicateKey { table: "s".into() }
        );
    }

    #[test]
    fn delete_all() {
        let db = set_db(&[("s", &[1, 2])]);
        let out = exec_statement(&SqlStatement::DeleteAll { table: "s".into() }, &db).unwrap();
        assert!(out.get("s").unwrap().is_empty());
        assert!(out.get("s").unwrap().is_set_table());
    }

    #[test]
    fn delete_where_on_pairs() {
        let pairs = [(1, 2), (3, 4)].map(|(a, b)| (Scalar::int(a), Scalar::int(b)));
        let db: Database = [
            ("r".to_string(), Relation::pair_table(pairs.clone())),
            ("k".to_string(), Relation::set_table(ints(&[1]))),
        ]
        .into_iter()
        .collect();
        let st = SqlStatement::DeleteWhere {
            table: "r".into(),
            filter: SqlPred::In(
                vec![SqlTerm::col("r", "id")],
                Box::new(select("ktmp", "k", SqlPred::True)),
            ),
        };
        let out = exec_statement(&st, &db).unwrap();
        // oracle: keep pairs whose key is not in k
        let oracle: BTreeSet<_> = pairs
            .into_iter()
            .filter(|(a, _)| *a != Scalar::int(1))
            .collect();
        assert_eq!(relation_as_pairs(out.get("r").unwrap()).unwrap(), oracle);
    }

    #[test]
    fn delete_where_respects_shadowing() {
        // the inner `s` alias rebinds the name, so only the outer one refers
        // to the deleted row
        let db = set_db(&[("s", &[1, 2, 3]), ("t", &[2])]);
        let inner = select(
            "s",
            "t",
            SqlPred::eq(SqlTerm::col("s", REFKEY), SqlTerm::Lit(Scalar::int(2))),
        );
        let st = SqlStatement::DeleteWhere {
            table: "s".into(),
            filter: SqlPred::In(vec![SqlTerm::col("s", REFKEY)], Box::new(inner)),
        };
        let out = exec_statement(&st, &db).unwrap();
        assert_eq!(
            relation_as_set(out.get("s").unwrap()).unwrap(),
            ints(&[1, 3])
        );
    }

    #[test]
    fn sequence_threads_left_to_right() {
        let db = set_db(&[("s", &[1]), ("t", &[2])]);
        assert_eq!(exec_sequence(&[], &db).unwrap(), db);
        let sts = [
            SqlStatement::DeleteAll { table: "s".into() },
            SqlStatement::InsertIgnore {
                table: "s".into(),
                query: select("x", "t", SqlPred::True),
            },
        ];
        let out = exec_sequence(&sts, &db).unwrap();
        assert_eq!(out, set_db(&[("s", &[2]), ("t", &[2])]));
        let twice = [
            SqlStatement::DeleteAll { table: "s".into() },
            SqlStatement::DeleteAll { table: "s".into() },
        ];
        assert_eq!(
            exec_sequence(&twice, &db).unwrap(),
            set_db(&[("s", &[]), ("t", &[2])])
        );
    }

    #[test]
    fn sequence_error_carries_index() {
        let db = set_db(&[("s", &[1])]);
        let sts = [
            SqlStatement::DeleteAll { table: "s".into() },
            SqlStatement::DeleteAll {
                table: "gone".into(),
            },
        ];
        match exec_sequence(&sts, &db).unwrap_err() {
            SqlError::Statement { index, source } => {
                assert_eq!(index, 1);
                assert_eq!(*source, SqlError::UnboundTable("gone".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_subquery_comparison() {
        let db = set_db(&[("s", &[1, 2]), ("t", &[5, 6, 7])]);
        let count = |t: &str| {
            SqlTerm::Scalar(Box::new(SqlQuery::Count {
                column: SqlTerm::col("c", REFKEY),
                from: TableSource::table(t, "c"),
            }))
        };
        let p = SqlPred::Compare(count("s"), CmpOp::Lt, count("t"));
        assert!(eval_pred(&p, &db).unwrap());
        let bad = SqlPred::Compare(
            SqlTerm::Lit(Scalar::Bool(true)),
            CmpOp::Lt,
            SqlTerm::Lit(Scalar::int(1)),
        );
        assert!(matches!(
            eval_pred(&bad, &db),
            Err(SqlError::Incomparable { .. })
        ));
    }
}
