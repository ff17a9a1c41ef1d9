//! Type checking for expressions, predicates and action sets.
//!
//! Scalar-typed machine variables are rejected: the translation has no rule
//! for them, only for scalar literals and `card`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{ActionSet, BinOp, EbType, Expr, Formula, Pred, UnOp};
use crate::model::ScalarKind;

pub type TypeEnv = BTreeMap<String, EbType>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type error in `{node}`: expected {expected}, found {found}")]
    Mismatch {
        node: String,
        expected: String,
        found: String,
    },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

type Kind = Option<ScalarKind>;

/// Inferred type with possibly unresolved element kinds. `Empty` is the
/// type of `{}`, which may be used as either a set or a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ty {
    Int,
    Bool,
    Set(Kind),
    Rel(Kind, Kind),
    Empty,
}

impl Ty {
    fn describe(self) -> String {
        let k = |k: Kind| k.map_or("?".to_string(), |k| k.to_string());
        match self {
            Ty::Int => "int".into(),
            Ty::Bool => "bool".into(),
            Ty::Set(a) => format!("set({})", k(a)),
            Ty::Rel(a, b) => format!("{} <-> {}", k(a), k(b)),
            Ty::Empty => "empty collection".into(),
        }
    }

    /// Concrete type; unresolved kinds default to `int`.
    pub(crate) fn resolve(self) -> EbType {
        let k = |k: Kind| k.unwrap_or(ScalarKind::Int);
        match self {
            Ty::Int => EbType::Int,
            Ty::Bool => EbType::Bool,
            Ty::Set(a) => EbType::Set(k(a)),
            Ty::Rel(a, b) => EbType::Rel(k(a), k(b)),
            Ty::Empty => EbType::Set(ScalarKind::Int),
        }
    }

    fn of(t: EbType) -> Ty {
        match t {
            EbType::Int => Ty::Int,
            EbType::Bool => Ty::Bool,
            EbType::Set(a) => Ty::Set(Some(a)),
            EbType::Rel(a, b) => Ty::Rel(Some(a), Some(b)),
        }
    }

    fn is_collection(self) -> bool {
        matches!(self, Ty::Set(_) | Ty::Rel(..) | Ty::Empty)
    }

    fn as_set(self) -> Option<Kind> {
        match self {
            Ty::Set(k) => Some(k),
            Ty::Empty => Some(None),
            _ => None,
        }
    }

    fn as_rel(self) -> Option<(Kind, Kind)> {
        match self {
            Ty::Rel(a, b) => Some((a, b)),
            Ty::Empty => Some((None, None)),
            _ => None,
        }
    }
}

fn unify_kind(a: Kind, b: Kind) -> Option<Kind> {
    match (a, b) {
        (None, k) | (k, None) => Some(k),
        (Some(x), Some(y)) if x == y => Some(Some(x)),
        _ => None,
    }
}

fn unify_coll(a: Ty, b: Ty) -> Option<Ty> {
    match (a, b) {
        (Ty::Empty, t) | (t, Ty::Empty) if t.is_collection() => Some(t),
        (Ty::Set(x), Ty::Set(y)) => Some(Ty::Set(unify_kind(x, y)?)),
        (Ty::Rel(x1, x2), Ty::Rel(y1, y2)) => {
            Some(Ty::Rel(unify_kind(x1, y1)?, unify_kind(x2, y2)?))
        }
        _ => None,
    }
}

fn mismatch<T>(node: &dyn std::fmt::Display, expected: &str, found: Ty) -> Result<T, TypeError> {
    Err(TypeError::Mismatch {
        node: node.to_string(),
        expected: expected.to_string(),
        found: found.describe(),
    })
}

fn homogeneous(
    node: &Expr,
    mut kinds: impl Iterator<Item = ScalarKind>,
) -> Result<Kind, TypeError> {
    let first = kinds.next();
    for k in kinds {
        if Some(k) != first {
            return Err(TypeError::Mismatch {
                node: node.to_string(),
                expected: format!("elements of kind {}", first.expect("nonempty")),
                found: k.to_string(),
            });
        }
    }
    Ok(first)
}

pub(crate) fn infer(e: &Expr, env: &TypeEnv) -> Result<Ty, TypeError> {
    match e {
        Expr::Var(v) => match env.get(v) {
            None => Err(TypeError::UnboundVariable(v.clone())),
            Some(t @ (EbType::Int | EbType::Bool)) => Err(TypeError::Mismatch {
                node: v.clone(),
                expected: "set or relation variable".into(),
                found: format!("{t} variable"),
            }),
            Some(t) => Ok(Ty::of(*t)),
        },
        Expr::Int(_) => Ok(Ty::Int),
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::SetLit(xs) if xs.is_empty() => Ok(Ty::Empty),
        Expr::SetLit(xs) => Ok(Ty::Set(homogeneous(e, xs.iter().map(|x| x.kind()))?)),
        Expr::RelLit(xs) if xs.is_empty() => Ok(Ty::Empty),
        Expr::RelLit(xs) => Ok(Ty::Rel(
            homogeneous(e, xs.iter().map(|(a, _)| a.kind()))?,
            homogeneous(e, xs.iter().map(|(_, b)| b.kind()))?,
        )),
        Expr::Unary(op, inner) => {
            let t = infer(inner, env)?;
            match op {
                UnOp::Card if t.is_collection() => Ok(Ty::Int),
                UnOp::Card => mismatch(e, "collection", t),
                UnOp::Dom => match t.as_rel() {
                    Some((a, _)) => Ok(Ty::Set(a)),
                    None => mismatch(e, "relation", t),
                },
                UnOp::Ran => match t.as_rel() {
                    Some((_, b)) => Ok(Ty::Set(b)),
                    None => mismatch(e, "relation", t),
                },
                UnOp::Inverse => match t {
                    Ty::Empty => Ok(Ty::Empty),
                    Ty::Rel(a, b) => Ok(Ty::Rel(b, a)),
                    _ => mismatch(e, "relation", t),
                },
            }
        }
        Expr::Binary(op, l, r) => {
            let lt = infer(l, env)?;
            let rt = infer(r, env)?;
            infer_binary(e, *op, lt, rt)
        }
    }
}

fn infer_binary(e: &Expr, op: BinOp, lt: Ty, rt: Ty) -> Result<Ty, TypeError> {
    let kinds = |a: Kind, b: Kind, what: &str| {
        unify_kind(a, b).ok_or_else(|| TypeError::Mismatch {
            node: e.to_string(),
            expected: what.to_string(),
            found: format!(
                "{} and {}",
                a.map_or("?".into(), |k| k.to_string()),
                b.map_or("?".into(), |k| k.to_string())
            ),
        })
    };
    let set = |t: Ty| t.as_set().ok_or(t);
    let rel = |t: Ty| t.as_rel().ok_or(t);
    match op {
        BinOp::Union | BinOp::Inter | BinOp::Diff => match unify_coll(lt, rt) {
            Some(t) => Ok(t),
            None if !lt.is_collection() => mismatch(e, "collection", lt),
            None => mismatch(e, &lt.describe(), rt),
        },
        BinOp::CProd => {
            let a = set(lt).or_else(|t| mismatch(e, "set", t))?;
            let b = set(rt).or_else(|t| mismatch(e, "set", t))?;
            Ok(Ty::Rel(a, b))
        }
        BinOp::DomRes | BinOp::DomSub => {
            let s = set(lt).or_else(|t| mismatch(e, "set", t))?;
            let (a, b) = rel(rt).or_else(|t| mismatch(e, "relation", t))?;
            Ok(Ty::Rel(
                kinds(s, a, "set kind matching the relation domain")?,
                b,
            ))
        }
        BinOp::RanRes | BinOp::RanSub => {
            let (a, b) = rel(lt).or_else(|t| mismatch(e, "relation", t))?;
            let s = set(rt).or_else(|t| mismatch(e, "set", t))?;
            Ok(Ty::Rel(
                a,
                kinds(b, s, "set kind matching the relation range")?,
            ))
        }
        BinOp::FComp | BinOp::BComp => {
            let (first, second) = if op == BinOp::FComp {
                (lt, rt)
            } else {
                (rt, lt)
            };
            let (a, b) = rel(first).or_else(|t| mismatch(e, "relation", t))?;
            let (c, d) = rel(second).or_else(|t| mismatch(e, "relation", t))?;
            kinds(b, c, "composable relations")?;
            Ok(Ty::Rel(a, d))
        }
        BinOp::Ovl => {
            let (a1, b1) = rel(lt).or_else(|t| mismatch(e, "relation", t))?;
            let (a2, b2) = rel(rt).or_else(|t| mismatch(e, "relation", t))?;
            Ok(Ty::Rel(
                kinds(a1, a2, "matching domains")?,
                kinds(b1, b2, "matching ranges")?,
            ))
        }
        BinOp::Image => {
            let (a, b) = rel(lt).or_else(|t| mismatch(e, "relation", t))?;
            let s = set(rt).or_else(|t| mismatch(e, "set", t))?;
            kinds(a, s, "set kind matching the relation domain")?;
            Ok(Ty::Set(b))
        }
    }
}

/// Infers the type of `e`. Kinds left open by `{}` default to `int`.
pub fn typecheck_expr(e: &Expr, env: &TypeEnv) -> Result<EbType, TypeError> {
    infer(e, env).map(Ty::resolve)
}

pub fn typecheck_pred(p: &Pred, env: &TypeEnv) -> Result<(), TypeError> {
    match p {
        Pred::Not(q) => typecheck_pred(q, env),
        Pred::And(a, b) | Pred::Or(a, b) => {
            typecheck_pred(a, env)?;
            typecheck_pred(b, env)
        }
        Pred::Eq(a, b) => {
            let (at, bt) = (infer(a, env)?, infer(b, env)?);
            match (at, bt) {
                (Ty::Int, Ty::Int) | (Ty::Bool, Ty::Bool) => Ok(()),
                _ if unify_coll(at, bt).is_some() => Ok(()),
                _ => mismatch(p, &at.describe(), bt),
            }
        }
        Pred::In(x, s) => {
            let xt = infer(x, env)?;
            let st = infer(s, env)?;
            let kind = match xt {
                Ty::Int => ScalarKind::Int,
                Ty::Bool => ScalarKind::Bool,
                _ => return mismatch(p, "scalar element", xt),
            };
            match st.as_set() {
                Some(k) if unify_kind(k, Some(kind)).is_some() => Ok(()),
                _ => mismatch(p, &format!("set({kind})"), st),
            }
        }
        Pred::Subset(a, b) | Pred::SubsetEq(a, b) => {
            let (at, bt) = (infer(a, env)?, infer(b, env)?);
            match unify_coll(at, bt) {
                Some(_) => Ok(()),
                None if !at.is_collection() => mismatch(p, "collection", at),
                None => mismatch(p, &at.describe(), bt),
            }
        }
    }
}

/// Predicates have type `bool`.
pub fn typecheck_formula(f: &Formula, env: &TypeEnv) -> Result<EbType, TypeError> {
    match f {
        Formula::Expr(e) => typecheck_expr(e, env),
        Formula::Pred(p) => typecheck_pred(p, env).map(|()| EbType::Bool),
    }
}

/// Each target must be a set or relation variable and each right-hand side
/// must have the target's type.
pub fn typecheck_actions(actions: &ActionSet, env: &TypeEnv) -> Result<(), TypeError> {
    for a in actions.assignments() {
        let target = match env.get(&a.target) {
            None => return Err(TypeError::UnboundVariable(a.target.clone())),
            Some(t) if !t.is_collection() => {
                return Err(TypeError::Mismatch {
                    node: a.to_string(),
                    expected: "set or relation target".into(),
                    found: t.to_string(),
                })
            }
            Some(t) => Ty::of(*t),
        };
        let rhs = infer(&a.rhs, env)?;
        if unify_coll(target, rhs).is_none() {
            return mismatch(a, &target.describe(), rhs);
        }
    }
    Ok(())
}
