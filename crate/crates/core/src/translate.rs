//! Event-B to SQL translation and the drivers that execute translated
//! action sets against a database.
//!
//! Aliases are `<base><n>` with a counter local to one translation call;
//! operands are translated before the aliases of the enclosing rule are
//! drawn.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::eb::{
    infer, typecheck_actions, typecheck_expr, typecheck_pred, ActionSet, Assignment, BinOp, Expr,
    Formula, Pred, Ty, TypeEnv, TypeError, UnOp,
};
use crate::model::{primed, Database, Scalar, ID, REFKEY, VALUE};
use crate::sql::{
    eval_query_with_stats, exec_sequence_with_stats, CmpOp, Column, EvalStats, Select, SqlError,
    SqlExpr, SqlPred, SqlQuery, SqlStatement, SqlTerm, TableSource,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("no translation for `{0}`")]
    Untranslatable(String),
}

/// Deliberate rule faults, used to check that the harness notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Intersection is translated as difference.
    IntersectAsDifference,
    /// Domain restriction and domain subtraction trade translations.
    SwapDomainRestriction,
    /// The override assignment inserts before it deletes.
    InsertBeforeDeleteOverride,
    /// `dom` drops its `distinct`.
    DropDistinctDom,
    /// Inserts fail on rows already present instead of skipping them.
    DropInsertIgnore,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::IntersectAsDifference,
        Mutation::SwapDomainRestriction,
        Mutation::InsertBeforeDeleteOverride,
        Mutation::DropDistinctDom,
        Mutation::DropInsertIgnore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::IntersectAsDifference => "intersect-as-difference",
            Mutation::SwapDomainRestriction => "swap-domain-restriction",
            Mutation::InsertBeforeDeleteOverride => "insert-before-delete",
            Mutation::DropDistinctDom => "drop-distinct-dom",
            Mutation::DropInsertIgnore => "drop-insert-ignore",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Mutation::ALL.iter().map(|m| m.name()).collect();
                format!(
                    "unknown mutation `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TranslateOptions {
    /// Always use the two general assignment rules.
    pub force_general: bool,
    pub mutation: Option<Mutation>,
}

impl TranslateOptions {
    fn mutated(&self, m: Mutation) -> bool {
        self.mutation == Some(m)
    }
}

/// The assignment rule applied, in matching order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// `s := s \/ s1`
    SetUnion,
    /// `s := s \ s1`
    SetDiff,
    /// `s := s /\ s1`
    SetInter,
    /// `r := r <+ r1`
    Override,
    /// `r := s1 <<| r`
    DomSub,
    /// `r := s1 <| r`
    DomRes,
    /// `r := r |>> s1`
    RanSub,
    /// `r := r |> s1`
    RanRes,
    /// `s := s1`
    SetGeneral,
    /// `r := r1`
    RelGeneral,
}

impl Rule {
    pub const ALL: [Rule; 10] = [
        Rule::SetUnion,
        Rule::SetDiff,
        Rule::SetInter,
        Rule::Override,
        Rule::DomSub,
        Rule::DomRes,
        Rule::RanSub,
        Rule::RanRes,
        Rule::SetGeneral,
        Rule::RelGeneral,
    ];

    /// Position in matching order, from 1.
    pub fn number(self) -> usize {
        Rule::ALL.iter().position(|r| *r == self).expect("listed") + 1
    }

    fn primed_shape(self) -> Shape {
        match self {
            Rule::Override | Rule::RelGeneral => Shape::Rel,
            _ => Shape::Set,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Set,
    Rel,
}

impl Shape {
    fn base(self) -> &'static str {
        match self {
            Shape::Set => "s",
            Shape::Rel => "r",
        }
    }
}

#[derive(Clone, Copy)]
enum Operand<'e> {
    Expr(&'e Expr),
    /// `{x}` for a scalar-valued expression `x`.
    Single(&'e Expr),
}

fn col(alias: &str, attr: &str) -> SqlTerm {
    SqlTerm::col(alias, attr)
}

fn columns(alias: &str, shape: Shape) -> Vec<Column> {
    match shape {
        Shape::Set => vec![Column::new(col(alias, REFKEY), REFKEY)],
        Shape::Rel => vec![
            Column::new(col(alias, ID), ID),
            Column::new(col(alias, VALUE), VALUE),
        ],
    }
}

fn row_terms(alias: &str, shape: Shape) -> Vec<SqlTerm> {
    columns(alias, shape).into_iter().map(|c| c.term).collect()
}

fn select(
    distinct: bool,
    columns: Vec<Column>,
    from: Vec<TableSource>,
    filter: SqlPred,
) -> SqlQuery {
    SqlQuery::Select(Select {
        distinct,
        columns,
        from,
        filter,
    })
}

fn lit(x: &Scalar) -> SqlTerm {
    SqlTerm::Lit(x.clone())
}

struct Translator<'a> {
    env: &'a TypeEnv,
    opts: TranslateOptions,
    next: usize,
}

impl<'a> Translator<'a> {
    fn new(env: &'a TypeEnv, opts: TranslateOptions) -> Self {
        Translator { env, opts, next: 0 }
    }

    fn fresh(&mut self, base: &str) -> String {
        let alias = format!("{base}{}", self.next);
        self.next += 1;
        alias
    }

    fn shape(&self, e: &Expr, hint: Shape) -> Result<Shape, TranslateError> {
        match infer(e, self.env)? {
            Ty::Set(_) => Ok(Shape::Set),
            Ty::Rel(..) => Ok(Shape::Rel),
            Ty::Empty => Ok(hint),
            Ty::Int | Ty::Bool => Err(TranslateError::Untranslatable(e.to_string())),
        }
    }

    /// Shape shared by two operands of a set-algebra operator or comparison.
    fn joint_shape(&self, a: &Expr, b: &Expr, hint: Shape) -> Result<Shape, TranslateError> {
        let sa = self.shape(a, hint)?;
        let sb = self.shape(b, sa)?;
        Ok(if sa == Shape::Rel || sb == Shape::Rel {
            Shape::Rel
        } else {
            Shape::Set
        })
    }

    fn literal(&mut self, rows: Vec<Vec<SqlTerm>>, shape: Shape) -> SqlQuery {
        let names: &[&str] = match shape {
            Shape::Set => &[REFKEY],
            Shape::Rel => &[ID, VALUE],
        };
        let row_select = |terms: Vec<SqlTerm>, filter| {
            let cols = terms
                .into_iter()
                .zip(names)
                .map(|(t, n)| Column::new(t, *n))
                .collect();
            select(false, cols, vec![], filter)
        };
        if rows.is_empty() {
            let zero = SqlTerm::Lit(Scalar::int(0));
            let never = SqlPred::eq(SqlTerm::Lit(Scalar::int(1)), zero.clone());
            return row_select(vec![zero; names.len()], never);
        }
        rows.into_iter()
            .map(|r| row_select(r, SqlPred::True))
            .reduce(|acc, q| SqlQuery::Union(Box::new(acc), Box::new(q)))
            .expect("non-empty")
    }

    fn query(&mut self, e: &Expr, hint: Shape) -> Result<SqlQuery, TranslateError> {
        let shape = self.shape(e, hint)?;
        match e {
            Expr::Var(v) => {
                let a = self.fresh(&format!("{}tmp", shape.base()));
                Ok(select(
                    false,
                    columns(&a, shape),
                    vec![TableSource::table(v.clone(), &a)],
                    SqlPred::True,
                ))
            }
            Expr::SetLit(xs) => Ok(self.literal(xs.iter().map(|x| vec![lit(x)]).collect(), shape)),
            Expr::RelLit(ps) => Ok(self.literal(
                ps.iter().map(|(x, y)| vec![lit(x), lit(y)]).collect(),
                shape,
            )),
            Expr::Int(_) | Expr::Bool(_) => Err(TranslateError::Untranslatable(e.to_string())),
            Expr::Unary(op, r) => {
                let (distinct, cols) = match op {
                    UnOp::Dom => (
                        !self.opts.mutated(Mutation::DropDistinctDom),
                        vec![(ID, REFKEY)],
                    ),
                    UnOp::Ran => (true, vec![(VALUE, REFKEY)]),
                    UnOp::Inverse => (false, vec![(VALUE, ID), (ID, VALUE)]),
                    UnOp::Card => return Err(TranslateError::Untranslatable(e.to_string())),
                };
                let q = self.query(r, Shape::Rel)?;
                let a = self.fresh("rtmp");
                let cols = cols
                    .into_iter()
                    .map(|(src, name)| Column::new(col(&a, src), name))
                    .collect();
                Ok(select(
                    distinct,
                    cols,
                    vec![TableSource::derived(q, &a)],
                    SqlPred::True,
                ))
            }
            Expr::Binary(op, l, r) => self.binary(*op, l, r, shape),
        }
    }

    fn binary(
        &mut self,
        op: BinOp,
        l: &Expr,
        r: &Expr,
        shape: Shape,
    ) -> Result<SqlQuery, TranslateError> {
        let (l_op, r_op) = (Operand::Expr(l), Operand::Expr(r));
        match op {
            BinOp::Union => self.union(l_op, r_op, shape),
            BinOp::Inter => self.inter(l_op, r_op, shape),
            BinOp::Diff => self.diff(l_op, r_op, shape),
            BinOp::CProd => {
                let ql = self.query(l, Shape::Set)?;
                let qr = self.query(r, Shape::Set)?;
                let a1 = self.fresh("s1tmp");
                let a2 = self.fresh("s2tmp");
                Ok(select(
                    false,
                    vec![
                        Column::new(col(&a1, REFKEY), ID),
                        Column::new(col(&a2, REFKEY), VALUE),
                    ],
                    vec![TableSource::derived(ql, &a1), TableSource::derived(qr, &a2)],
                    SqlPred::True,
                ))
            }
            BinOp::DomRes | BinOp::DomSub | BinOp::RanRes | BinOp::RanSub => {
                let (s, rel, attr) = match op {
                    BinOp::DomRes | BinOp::DomSub => (l, r, ID),
                    _ => (r, l, VALUE),
                };
                let mut restrict = matches!(op, BinOp::DomRes | BinOp::RanRes);
                if matches!(op, BinOp::DomRes | BinOp::DomSub)
                    && self.opts.mutated(Mutation::SwapDomainRestriction)
                {
                    restrict = !restrict;
                }
                let qr = self.query(rel, Shape::Rel)?;
                let qs = self.query(s, Shape::Set)?;
                let ra = self.fresh("rtmp");
                let sa = self.fresh("stmp");
                let cols = columns(&ra, Shape::Rel);
                Ok(if restrict {
                    select(
                        false,
                        cols,
                        vec![TableSource::derived(qr, &ra), TableSource::derived(qs, &sa)],
                        SqlPred::eq(col(&ra, attr), col(&sa, REFKEY)),
                    )
                } else {
                    let sub = select(
                        false,
                        columns(&sa, Shape::Set),
                        vec![TableSource::derived(qs, &sa)],
                        SqlPred::True,
                    );
                    select(
                        false,
                        cols,
                        vec![TableSource::derived(qr, &ra)],
                        SqlPred::NotIn(vec![col(&ra, attr)], Box::new(sub)),
                    )
                })
            }
            BinOp::FComp => {
                let q1 = self.query(l, Shape::Rel)?;
                let q2 = self.query(r, Shape::Rel)?;
                let a1 = self.fresh("r1tmp");
                let a2 = self.fresh("r2tmp");
                Ok(select(
                    true,
                    vec![
                        Column::new(col(&a1, ID), ID),
                        Column::new(col(&a2, VALUE), VALUE),
                    ],
                    vec![TableSource::derived(q1, &a1), TableSource::derived(q2, &a2)],
                    SqlPred::eq(col(&a1, VALUE), col(&a2, ID)),
                ))
            }
            BinOp::BComp => self.query(
                &Expr::binary(BinOp::FComp, r.clone(), l.clone()),
                Shape::Rel,
            ),
            BinOp::Ovl => {
                let e = Expr::union(
                    r.clone(),
                    Expr::binary(BinOp::DomSub, Expr::dom(r.clone()), l.clone()),
                );
                self.query(&e, Shape::Rel)
            }
            BinOp::Image => {
                let qr = self.query(l, Shape::Rel)?;
                let qs = self.query(r, Shape::Set)?;
                let ra = self.fresh("rtmp");
                let sa = self.fresh("stmp");
                Ok(select(
                    true,
                    vec![Column::new(col(&ra, VALUE), REFKEY)],
                    vec![TableSource::derived(qr, &ra), TableSource::derived(qs, &sa)],
                    SqlPred::eq(col(&ra, ID), col(&sa, REFKEY)),
                ))
            }
        }
    }

    fn operand(&mut self, op: Operand<'_>, shape: Shape) -> Result<SqlQuery, TranslateError> {
        match op {
            Operand::Expr(e) => self.query(e, shape),
            Operand::Single(x) => {
                let t = self.term(x)?;
                Ok(select(
                    false,
                    vec![Column::new(t, REFKEY)],
                    vec![],
                    SqlPred::True,
                ))
            }
        }
    }

    fn operand_pair(
        &mut self,
        a: Operand<'_>,
        b: Operand<'_>,
        shape: Shape,
    ) -> Result<(SqlQuery, SqlQuery, String, String), TranslateError> {
        let qa = self.operand(a, shape)?;
        let qb = self.operand(b, shape)?;
        let a1 = self.fresh(&format!("{}1tmp", shape.base()));
        let a2 = self.fresh(&format!("{}2tmp", shape.base()));
        Ok((qa, qb, a1, a2))
    }

    fn union(
        &mut self,
        a: Operand<'_>,
        b: Operand<'_>,
        shape: Shape,
    ) -> Result<SqlQuery, TranslateError> {
        let (qa, qb, a1, a2) = self.operand_pair(a, b, shape)?;
        let left = select(
            false,
            columns(&a1, shape),
            vec![TableSource::derived(qa, &a1)],
            SqlPred::True,
        );
        let right = select(
            false,
            columns(&a2, shape),
            vec![TableSource::derived(qb, &a2)],
            SqlPred::True,
        );
        Ok(SqlQuery::Union(Box::new(left), Box::new(right)))
    }

    fn inter(
        &mut self,
        a: Operand<'_>,
        b: Operand<'_>,
        shape: Shape,
    ) -> Result<SqlQuery, TranslateError> {
        if self.opts.mutated(Mutation::IntersectAsDifference) {
            return self.diff(a, b, shape);
        }
        let (qa, qb, a1, a2) = self.operand_pair(a, b, shape)?;
        let filter = row_terms(&a1, shape)
            .into_iter()
            .zip(row_terms(&a2, shape))
            .map(|(x, y)| SqlPred::eq(x, y))
            .reduce(SqlPred::and)
            .expect("at least one column");
        Ok(select(
            false,
            columns(&a1, shape),
            vec![TableSource::derived(qa, &a1), TableSource::derived(qb, &a2)],
            filter,
        ))
    }

    fn diff(
        &mut self,
        a: Operand<'_>,
        b: Operand<'_>,
        shape: Shape,
    ) -> Result<SqlQuery, TranslateError> {
        let (qa, qb, a1, a2) = self.operand_pair(a, b, shape)?;
        let sub = select(
            false,
            columns(&a2, shape),
            vec![TableSource::derived(qb, &a2)],
            SqlPred::True,
        );
        Ok(select(
            false,
            columns(&a1, shape),
            vec![TableSource::derived(qa, &a1)],
            SqlPred::NotIn(row_terms(&a1, shape), Box::new(sub)),
        ))
    }

    fn count(&mut self, op: Operand<'_>, shape: Shape) -> Result<SqlQuery, TranslateError> {
        let q = self.operand(op, shape)?;
        let a = self.fresh(&format!("{}tmp", shape.base()));
        let attr = match shape {
            Shape::Set => REFKEY,
            Shape::Rel => ID,
        };
        Ok(SqlQuery::Count {
            column: col(&a, attr),
            from: TableSource::derived(q, &a),
        })
    }

    fn count_term(&mut self, op: Operand<'_>, shape: Shape) -> Result<SqlTerm, TranslateError> {
        Ok(SqlTerm::Scalar(Box::new(self.count(op, shape)?)))
    }

    /// `|a /\ b|` as a scalar term.
    fn count_inter(
        &mut self,
        a: Operand<'_>,
        b: Operand<'_>,
        shape: Shape,
    ) -> Result<SqlTerm, TranslateError> {
        let q = self.inter(a, b, shape)?;
        let alias = self.fresh(&format!("{}tmp", shape.base()));
        let attr = match shape {
            Shape::Set => REFKEY,
            Shape::Rel => ID,
        };
        Ok(SqlTerm::Scalar(Box::new(SqlQuery::Count {
            column: col(&alias, attr),
            from: TableSource::derived(q, &alias),
        })))
    }

    /// `|a /\ b| = |a|`, followed by `|a| op |b|` when `tail` is given.
    fn inclusion(
        &mut self,
        a: Operand<'_>,
        b: Operand<'_>,
        shape: Shape,
        tail: Option<CmpOp>,
    ) -> Result<SqlPred, TranslateError> {
        let both = self.count_inter(a, b, shape)?;
        let ca = self.count_term(a, shape)?;
        let head = SqlPred::eq(both, ca);
        let Some(op) = tail else {
            return Ok(head);
        };
        let ca = self.count_term(a, shape)?;
        let cb = self.count_term(b, shape)?;
        Ok(SqlPred::and(head, SqlPred::Compare(ca, op, cb)))
    }

    fn term(&mut self, x: &Expr) -> Result<SqlTerm, TranslateError> {
        match x {
            Expr::Int(i) => Ok(SqlTerm::Lit(Scalar::Int(i.clone()))),
            Expr::Bool(b) => Ok(SqlTerm::Lit(Scalar::Bool(*b))),
            Expr::Unary(UnOp::Card, e) => {
                let shape = self.shape(e, Shape::Set)?;
                self.count_term(Operand::Expr(e), shape)
            }
            _ => Err(TranslateError::Untranslatable(x.to_string())),
        }
    }

    fn is_scalar(&self, e: &Expr) -> Result<bool, TranslateError> {
        Ok(matches!(infer(e, self.env)?, Ty::Int | Ty::Bool))
    }

    fn pred(&mut self, p: &Pred) -> Result<SqlPred, TranslateError> {
        match p {
            Pred::Not(q) => Ok(SqlPred::not(self.pred(q)?)),
            Pred::And(a, b) => Ok(SqlPred::and(self.pred(a)?, self.pred(b)?)),
            Pred::Or(a, b) => Ok(SqlPred::or(self.pred(a)?, self.pred(b)?)),
            Pred::Eq(x, y) if self.is_scalar(x)? => Ok(SqlPred::eq(self.term(x)?, self.term(y)?)),
            Pred::Eq(x, y) => {
                let shape = self.joint_shape(x, y, Shape::Set)?;
                self.inclusion(Operand::Expr(x), Operand::Expr(y), shape, Some(CmpOp::Eq))
            }
            Pred::SubsetEq(x, y) => {
                let shape = self.joint_shape(x, y, Shape::Set)?;
                self.inclusion(Operand::Expr(x), Operand::Expr(y), shape, None)
            }
            Pred::Subset(x, y) => {
                let shape = self.joint_shape(x, y, Shape::Set)?;
                self.inclusion(Operand::Expr(x), Operand::Expr(y), shape, Some(CmpOp::Ne))
            }
            Pred::In(x, s) => {
                self.inclusion(Operand::Single(x), Operand::Expr(s), Shape::Set, None)
            }
        }
    }
}

/// Translates a formula: collections and `card` become queries, predicates
/// become SQL predicates and scalar literals become terms.
pub fn eb2sql_expr(
    f: &Formula,
    env: &TypeEnv,
    opts: TranslateOptions,
) -> Result<SqlExpr, TranslateError> {
    let mut tr = Translator::new(env, opts);
    match f {
        Formula::Pred(p) => {
            typecheck_pred(p, env)?;
            Ok(SqlExpr::Pred(tr.pred(p)?))
        }
        Formula::Expr(e) => {
            typecheck_expr(e, env)?;
            match e {
                Expr::Int(_) | Expr::Bool(_) => Ok(SqlExpr::Term(tr.term(e)?)),
                Expr::Unary(UnOp::Card, inner) => {
                    let shape = tr.shape(inner, Shape::Set)?;
                    Ok(SqlExpr::Query(tr.count(Operand::Expr(inner), shape)?))
                }
                _ => Ok(SqlExpr::Query(tr.query(e, Shape::Set)?)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentTranslation {
    pub rule: Rule,
    pub statements: Vec<SqlStatement>,
    /// Name of the temporary table the statements read.
    pub primed_table: String,
    /// Expression whose pre-state value the primed table must hold.
    pub primed_def: Expr,
}

fn match_rule(a: &Assignment, target_shape: Shape, opts: TranslateOptions) -> (Rule, Expr) {
    let t = &a.target;
    let is_target = |e: &Expr| matches!(e, Expr::Var(v) if v == t);
    let general = match target_shape {
        Shape::Set => Rule::SetGeneral,
        Shape::Rel => Rule::RelGeneral,
    };
    if opts.force_general {
        return (general, a.rhs.clone());
    }
    let target = Expr::var(t.clone());
    let Expr::Binary(op, l, r) = &a.rhs else {
        return (general, a.rhs.clone());
    };
    let swap = opts.mutated(Mutation::SwapDomainRestriction);
    let dom_minus = |s: &Expr| Expr::diff(Expr::dom(target.clone()), s.clone());
    match (target_shape, op) {
        (Shape::Set, BinOp::Union) if is_target(l) => (Rule::SetUnion, (**r).clone()),
        (Shape::Set, BinOp::Diff) if is_target(l) => (Rule::SetDiff, (**r).clone()),
        (Shape::Set, BinOp::Inter) if is_target(l) => {
            if opts.mutated(Mutation::IntersectAsDifference) {
                (Rule::SetInter, (**r).clone())
            } else {
                (Rule::SetInter, Expr::diff(target.clone(), (**r).clone()))
            }
        }
        (Shape::Rel, BinOp::Ovl) if is_target(l) => (Rule::Override, (**r).clone()),
        (Shape::Rel, BinOp::DomSub) if is_target(r) => (
            Rule::DomSub,
            if swap { dom_minus(l) } else { (**l).clone() },
        ),
        (Shape::Rel, BinOp::DomRes) if is_target(r) => (
            Rule::DomRes,
            if swap { (**l).clone() } else { dom_minus(l) },
        ),
        (Shape::Rel, BinOp::RanSub) if is_target(l) => (Rule::RanSub, (**r).clone()),
        (Shape::Rel, BinOp::RanRes) if is_target(l) => (
            Rule::RanRes,
            Expr::diff(Expr::ran(target.clone()), (**r).clone()),
        ),
        _ => (general, a.rhs.clone()),
    }
}

/// Translates one assignment into statements over the primed table.
pub fn eb2sql_assignment(
    a: &Assignment,
    env: &TypeEnv,
    opts: TranslateOptions,
) -> Result<AssignmentTranslation, TranslateError> {
    let single = ActionSet::new(vec![a.clone()]).expect("one assignment has no duplicates");
    typecheck_actions(&single, env)?;
    let target_shape = match env.get(&a.target) {
        Some(crate::eb::EbType::Rel(..)) => Shape::Rel,
        _ => Shape::Set,
    };
    let (rule, primed_def) = match_rule(a, target_shape, opts);
    let table = a.target.clone();
    let prime = primed(&table);
    let mut tr = Translator::new(env, opts);
    let from_prime = |tr: &mut Translator<'_>, base: &str, shape: Shape| {
        let alias = tr.fresh(base);
        select(
            false,
            columns(&alias, shape),
            vec![TableSource::table(prime.clone(), &alias)],
            SqlPred::True,
        )
    };
    let delete_in = |attr: &str, sub: SqlQuery| SqlStatement::DeleteWhere {
        table: table.clone(),
        filter: SqlPred::In(vec![col(&table, attr)], Box::new(sub)),
    };
    let insert = |query: SqlQuery| {
        if opts.mutated(Mutation::DropInsertIgnore) {
            SqlStatement::Insert {
                table: table.clone(),
                query,
            }
        } else {
            SqlStatement::InsertIgnore {
                table: table.clone(),
                query,
            }
        }
    };
    let statements = match rule {
        Rule::SetUnion => vec![insert(from_prime(&mut tr, "stmp", Shape::Set))],
        Rule::SetDiff | Rule::SetInter => {
            vec![delete_in(REFKEY, from_prime(&mut tr, "s1tmp", Shape::Set))]
        }
        Rule::Override => {
            let keys = {
                let alias = tr.fresh("r1tmp");
                select(
                    false,
                    vec![Column::new(col(&alias, ID), ID)],
                    vec![TableSource::table(prime.clone(), &alias)],
                    SqlPred::True,
                )
            };
            let del = delete_in(ID, keys);
            let ins = insert(from_prime(&mut tr, "r2tmp", Shape::Rel));
            if opts.mutated(Mutation::InsertBeforeDeleteOverride) {
                vec![ins, del]
            } else {
                vec![del, ins]
            }
        }
        Rule::DomSub | Rule::DomRes => vec![delete_in(ID, from_prime(&mut tr, "stmp", Shape::Set))],
        Rule::RanSub | Rule::RanRes => {
            vec![delete_in(VALUE, from_prime(&mut tr, "stmp", Shape::Set))]
        }
        Rule::SetGeneral => vec![
            SqlStatement::DeleteAll {
                table: table.clone(),
            },
            insert(from_prime(&mut tr, "s1tmp", Shape::Set)),
        ],
        Rule::RelGeneral => vec![
            SqlStatement::DeleteAll {
                table: table.clone(),
            },
            insert(from_prime(&mut tr, "r1tmp", Shape::Rel)),
        ],
    };
    Ok(AssignmentTranslation {
        rule,
        statements,
        primed_table: prime,
        primed_def,
    })
}

/// Statements for a whole action set, in assignment order.
pub fn eb2sql_actions(
    actions: &ActionSet,
    env: &TypeEnv,
    opts: TranslateOptions,
) -> Result<Vec<AssignmentTranslation>, TranslateError> {
    actions
        .assignments()
        .iter()
        .map(|a| eb2sql_assignment(a, env, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("assignment {assignment}: {source}")]
    Sql {
        assignment: usize,
        #[source]
        source: SqlError,
    },
}

fn primed_query(
    t: &AssignmentTranslation,
    env: &TypeEnv,
    opts: TranslateOptions,
) -> Result<SqlQuery, TranslateError> {
    Translator::new(env, opts).query(&t.primed_def, t.rule.primed_shape())
}

/// Binds the primed table of one assignment, evaluated in `db`.
pub fn eb2sql_o(
    a: &Assignment,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<Database, ExecError> {
    eb2sql_o_indexed(0, a, env, db, opts, &mut EvalStats::default())
}

fn eb2sql_o_indexed(
    index: usize,
    a: &Assignment,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<Database, ExecError> {
    let t = eb2sql_assignment(a, env, opts)?;
    let q = primed_query(&t, env, opts)?;
    let value = eval_query_with_stats(&q, db, stats).map_err(|source| ExecError::Sql {
        assignment: index,
        source,
    })?;
    Ok(db.update(t.primed_table, value))
}

/// Binds every primed table. Primed names never occur in user expressions,
/// so each definition sees the original tables.
pub fn eb2sql_os(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<Database, ExecError> {
    eb2sql_os_with_stats(actions, env, db, opts, &mut EvalStats::default())
}

fn eb2sql_os_with_stats(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<Database, ExecError> {
    actions
        .assignments()
        .iter()
        .enumerate()
        .try_fold(db.clone(), |db, (i, a)| {
            eb2sql_o_indexed(i, a, env, &db, opts, stats)
        })
}

/// Runs each assignment's statements, then drops its primed table.
pub fn eb2sql_as(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<Database, ExecError> {
    eb2sql_as_with_stats(actions, env, db, opts, &mut EvalStats::default())
}

fn eb2sql_as_with_stats(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<Database, ExecError> {
    let mut db = db.clone();
    for (i, a) in actions.assignments().iter().enumerate() {
        let t = eb2sql_assignment(a, env, opts)?;
        db = exec_sequence_with_stats(&t.statements, &db, stats).map_err(|source| {
            ExecError::Sql {
                assignment: i,
                source,
            }
        })?;
        db = db.remove(&t.primed_table);
    }
    Ok(db)
}

/// The database reached by executing the translated action set.
pub fn eb2sql_res(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<Database, ExecError> {
    eb2sql_res_with_stats(actions, env, db, opts, &mut EvalStats::default())
}

pub fn eb2sql_res_with_stats(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<Database, ExecError> {
    let primed_db = eb2sql_os_with_stats(actions, env, db, opts, stats)?;
    eb2sql_as_with_stats(actions, env, &primed_db, opts, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eb::{parse_actions, parse_expr, EbType};
    use crate::model::{relation_as_pairs, relation_as_set, Relation, ScalarKind};
    use crate::sql::emit_query;
    use std::collections::BTreeSet;

    fn env() -> TypeEnv {
        [
            ("s", EbType::Set(ScalarKind::Int)),
            ("t", EbType::Set(ScalarKind::Int)),
            ("s1", EbType::Set(ScalarKind::Int)),
            ("r", EbType::Rel(ScalarKind::Int, ScalarKind::Int)),
        ]
        .into_iter()
        .map(|(n, t)| (n.to_string(), t))
        .collect()
    }

    fn ints(v: &[i64]) -> BTreeSet<Scalar> {
        v.iter().map(|&i| Scalar::int(i)).collect()
    }

    fn pairs(v: &[(i64, i64)]) -> BTreeSet<(Scalar, Scalar)> {
        v.iter()
            .map(|&(a, b)| (Scalar::int(a), Scalar::int(b)))
            .collect()
    }

    fn sql(text: &str) -> String {
        let f = parse_expr(text).unwrap();
        eb2sql_expr(&f, &env(), TranslateOptions::default())
            .unwrap()
            .to_string()
    }

    fn assignment(text: &str) -> Assignment {
        parse_actions(text).unwrap().assignments()[0].clone()
    }

    fn db(sets: &[(&str, &[i64])], rels: &[(&str, &[(i64, i64)])]) -> Database {
        sets.iter()
            .map(|(n, v)| (n.to_string(), Relation::set_table(ints(v))))
            .chain(
                rels.iter()
                    .map(|(n, v)| (n.to_string(), Relation::pair_table(pairs(v)))),
            )
            .collect()
    }

    #[test]
    fn variable_and_dom() {
        assert_eq!(sql("s"), "select stmp0.refkey from s stmp0");
        assert_eq!(
            sql("dom(r)"),
            "select distinct rtmp1.id as refkey from (select rtmp0.id, rtmp0.value from r rtmp0) rtmp1"
        );
    }

    #[test]
    fn literals() {
        assert_eq!(sql("3"), "3");
        assert_eq!(sql("{3}"), "select 3 as refkey");
        assert_eq!(sql("{1, 2}"), "select 1 as refkey union select 2 as refkey");
        assert_eq!(sql("{}"), "select 0 as refkey where 1 = 0");
        assert_eq!(sql("{true}"), "select 1 as refkey");
    }

    #[test]
    fn empty_literal_follows_context() {
        assert_eq!(
            sql("r \\/ {}"),
            "select r1tmp1.id, r1tmp1.value from (select rtmp0.id, rtmp0.value from r rtmp0) r1tmp1 \
             union select r2tmp2.id, r2tmp2.value from (select 0 as id, 0 as value where 1 = 0) r2tmp2"
        );
    }

    #[test]
    fn card_is_a_count_query() {
        assert_eq!(
            sql("card(s)"),
            "select count(stmp1.refkey) from (select stmp0.refkey from s stmp0) stmp1"
        );
    }

    #[test]
    fn mutation_names_round_trip() {
        for m in Mutation::ALL {
            assert_eq!(m.name().parse::<Mutation>(), Ok(m));
        }
        assert!("nope".parse::<Mutation>().is_err());
    }

    #[test]
    fn rule_selection_is_syntactic() {
        let cases = [
            ("s := s \\/ t", Rule::SetUnion),
            ("s := t \\/ s", Rule::SetGeneral),
            ("s := s \\ t", Rule::SetDiff),
            ("s := s /\\ t", Rule::SetInter),
            ("r := r <+ {1 |-> 2}", Rule::Override),
            ("r := s <<| r", Rule::DomSub),
            ("r := s <| r", Rule::DomRes),
            ("r := r |>> s", Rule::RanSub),
            ("r := r |> s", Rule::RanRes),
            ("r := r \\/ r", Rule::RelGeneral),
            ("s := t", Rule::SetGeneral),
        ];
        for (text, rule) in cases {
            let t =
                eb2sql_assignment(&assignment(text), &env(), TranslateOptions::default()).unwrap();
            assert_eq!(t.rule, rule, "{text}");
        }
        let forced = TranslateOptions {
            force_general: true,
            mutation: None,
        };
        let t = eb2sql_assignment(&assignment("s := s \\/ t"), &env(), forced).unwrap();
        assert_eq!(t.rule, Rule::SetGeneral);
        assert_eq!(Rule::RelGeneral.number(), 10);
    }

    #[test]
    fn primed_definitions() {
        let opts = TranslateOptions::default();
        let base = db(
            &[("s", &[1, 2]), ("t", &[2]), ("s1", &[1])],
            &[("r", &[(1, 2), (3, 4)])],
        );

        let out = eb2sql_o(
            &assignment("s := s \\/ {3}"),
            &env(),
            &db(&[("s", &[1])], &[]),
            opts,
        )
        .unwrap();
        assert_eq!(
            relation_as_set(out.get("s__prime").unwrap()).unwrap(),
            ints(&[3])
        );

        // s /\ t binds s \ t, here {1,2} minus {2}
        let out = eb2sql_o(&assignment("s := s /\\ t"), &env(), &base, opts).unwrap();
        assert_eq!(
            relation_as_set(out.get("s__prime").unwrap()).unwrap(),
            ints(&[1])
        );

        // s1 <| r binds dom(r) \ s1, here {1,3} minus {1}
        let out = eb2sql_o(&assignment("r := s1 <| r"), &env(), &base, opts).unwrap();
        assert_eq!(
            relation_as_set(out.get("r__prime").unwrap()).unwrap(),
            ints(&[3])
        );
        assert_eq!(out.get("r"), base.get("r"));
    }

    #[test]
    fn res_examples() {
        let opts = TranslateOptions::default();
        let acts = parse_actions("s := s \\/ {3}").unwrap();
        let out = eb2sql_res(&acts, &env(), &db(&[("s", &[1])], &[]), opts).unwrap();
        assert_eq!(out, db(&[("s", &[1, 3])], &[]));

        let swap = parse_actions("s := t || t := s").unwrap();
        let out = eb2sql_res(&swap, &env(), &db(&[("s", &[1]), ("t", &[2])], &[]), opts).unwrap();
        assert_eq!(out, db(&[("s", &[2]), ("t", &[1])], &[]));

        let start = db(&[("s", &[1])], &[]);
        assert_eq!(
            eb2sql_res(&ActionSet::empty(), &env(), &start, opts).unwrap(),
            start
        );
    }

    #[test]
    fn override_then_restriction() {
        let opts = TranslateOptions::default();
        let start = db(&[("s", &[1])], &[("r", &[(1, 2), (3, 4)])]);
        let acts = parse_actions("r := r <+ {3 |-> 9, 5 |-> 6}").unwrap();
        let out = eb2sql_res(&acts, &env(), &start, opts).unwrap();
        assert_eq!(
            relation_as_pairs(out.get("r").unwrap()).unwrap(),
            pairs(&[(1, 2), (3, 9), (5, 6)])
        );

        let mutated = TranslateOptions {
            force_general: false,
            mutation: Some(Mutation::InsertBeforeDeleteOverride),
        };
        let out = eb2sql_res(&acts, &env(), &start, mutated).unwrap();
        assert_eq!(
            relation_as_pairs(out.get("r").unwrap()).unwrap(),
            pairs(&[(1, 2)])
        );
    }

    #[test]
    fn dropped_ignore_fails_on_overlap() {
        let opts = TranslateOptions {
            force_general: false,
            mutation: Some(Mutation::DropInsertIgnore),
        };
        let acts = parse_actions("s := s \\/ t").unwrap();
        let err = eb2sql_res(
            &acts,
            &env(),
            &db(&[("s", &[1, 2]), ("t", &[2])], &[]),
            opts,
        )
        .unwrap_err();
        assert!(matches!(err, ExecError::Sql { assignment: 0, .. }));
    }

    #[test]
    fn scalar_variables_are_rejected() {
        let mut env = env();
        env.insert("n".into(), EbType::Int);
        let f = parse_expr("n").unwrap();
        assert!(eb2sql_expr(&f, &env, TranslateOptions::default()).is_err());
    }

    #[test]
    fn emitted_primed_query() {
        let t = eb2sql_assignment(
            &assignment("r := r |> s"),
            &env(),
            TranslateOptions::default(),
        )
        .unwrap();
        let q = primed_query(&t, &env(), TranslateOptions::default()).unwrap();
        assert!(emit_query(&q).contains("not in"));
        assert_eq!(t.primed_def.to_string(), "ran(r) \\ s");
    }
}
