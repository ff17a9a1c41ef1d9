//! The Event-B fragment: syntax, parser and type checker.

mod ast;
mod parser;
mod typecheck;

pub use ast::{ActionSet, Assignment, BinOp, DuplicateTarget, EbType, Expr, Formula, Pred, UnOp};
pub use parser::{parse_actions, parse_expr, ActionsError, ParseError};
pub use typecheck::{
    typecheck_actions, typecheck_expr, typecheck_formula, typecheck_pred, TypeEnv, TypeError,
};

pub(crate) use typecheck::{infer, Ty};
