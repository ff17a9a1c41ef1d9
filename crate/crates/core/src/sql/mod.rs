//! The SQL fragment: syntax, text emission and a reference evaluator.

mod ast;
mod emit;
mod eval;

pub use ast::{
    CmpOp, Column, Select, Source, SqlExpr, SqlPred, SqlQuery, SqlStatement, SqlTerm, TableSource,
};
pub use emit::{emit_query, emit_statement, emit_statements, Dialect};
pub use eval::{
    eval_pred, eval_query, eval_query_with_stats, eval_sql_expr, eval_sql_expr_with_stats,
    exec_sequence, exec_sequence_with_stats, exec_statement, exec_statement_with_stats, EvalStats,
    SqlError, SqlValue,
};
