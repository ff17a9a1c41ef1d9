use crate::model::{Scalar, COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SqlTerm {
    /// `alias.attr`
    Col {
        alias: String,
        attr: String,
    },
    Lit(Scalar),
    /// A parenthesized query used as an atomic value; must yield one row
    /// with one column.
    Scalar(Box<SqlQuery>),
}

impl SqlTerm {
    pub fn col(alias: impl Into<String>, attr: impl Into<String>) -> Self {
        SqlTerm::Col {
            alias: alias.into(),
            attr: attr.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SqlPred {
    True,
    Not(Box<SqlPred>),
    And(Box<SqlPred>, Box<SqlPred>),
    Or(Box<SqlPred>, Box<SqlPred>),
    Compare(SqlTerm, CmpOp, SqlTerm),
    /// `t in (q)`, or `(t1, t2) in (q)` for a row of terms.
    In(Vec<SqlTerm>, Box<SqlQuery>),
    NotIn(Vec<SqlTerm>, Box<SqlQuery>),
}

impl SqlPred {
    pub fn and(a: SqlPred, b: SqlPred) -> Self {
        SqlPred::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SqlPred, b: SqlPred) -> Self {
        SqlPred::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: SqlPred) -> Self {
        SqlPred::Not(Box::new(p))
    }

    pub fn eq(a: SqlTerm, b: SqlTerm) -> Self {
        SqlPred::Compare(a, CmpOp::Eq, b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Source {
    Table(String),
    /// A derived relation: a subquery in the from clause.
    Derived(Box<SqlQuery>),
}

/// A from-clause entry binding a tuple variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TableSource {
    pub source: Source,
    pub alias: String,
}

impl TableSource {
    pub fn table(name: impl Into<String>, alias: impl Into<String>) -> Self {
        TableSource {
            source: Source::Table(name.into()),
            alias: alias.into(),
        }
    }

    pub fn derived(query: SqlQuery, alias: impl Into<String>) -> Self {
        TableSource {
            source: Source::Derived(Box::new(query)),
            alias: alias.into(),
        }
    }
}

/// Output column: a term and the attribute name it is exposed as.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    pub term: SqlTerm,
    pub name: String,
}

impl Column {
    pub fn new(term: SqlTerm, name: impl Into<String>) -> Self {
        Column {
            term,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Select {
    pub distinct: bool,
    pub columns: Vec<Column>,
    pub from: Vec<TableSource>,
    pub filter: SqlPred,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SqlQuery {
    Select(Select),
    Union(Box<SqlQuery>, Box<SqlQuery>),
    /// `select count(t) from src alias`
    Count {
        column: SqlTerm,
        from: TableSource,
    },
}

impl SqlQuery {
    /// Attribute names of the result, in column order.
    pub fn output_schema(&self) -> Vec<String> {
        match self {
            SqlQuery::Select(s) => s.columns.iter().map(|c| c.name.clone()).collect(),
            SqlQuery::Union(l, _) => l.output_schema(),
            SqlQuery::Count { .. } => vec![COUNT.to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SqlStatement {
    /// `insert ignore into t q`: set-union insert.
    InsertIgnore {
        table: String,
        query: SqlQuery,
    },
    /// `insert into t q`: fails when a row is already present.
    Insert {
        table: String,
        query: SqlQuery,
    },
    DeleteAll {
        table: String,
    },
    /// `delete from t where p`; `p` refers to rows of `t` through the alias `t`.
    DeleteWhere {
        table: String,
        filter: SqlPred,
    },
}

impl SqlStatement {
    pub fn table(&self) -> &str {
        match self {
            SqlStatement::InsertIgnore { table, .. }
            | SqlStatement::Insert { table, .. }
            | SqlStatement::DeleteAll { table }
            | SqlStatement::DeleteWhere { table, .. } => table,
        }
    }
}

/// Translation result for a formula: a query for collections and `card`,
/// a predicate for predicates, a bare term for scalar literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SqlExpr {
    Query(SqlQuery),
    Pred(SqlPred),
    Term(SqlTerm),
}
