//! Reference denotational interpreter for the Event-B fragment.
//!
//! This is the oracle side of every differential check; it never looks at
//! SQL or the database model.

use std::borrow::Cow;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use thiserror::Error;

use crate::eb::{ActionSet, Assignment, BinOp, Expr, Formula, Pred, UnOp};
use crate::model::{EbValue, MachineState, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("kind mismatch in `{node}`: expected {expected}, found {found}")]
    KindMismatch {
        node: String,
        expected: &'static str,
        found: &'static str,
    },
}

type Pairs = BTreeSet<(Scalar, Scalar)>;

fn kind_error<T>(
    node: &dyn std::fmt::Display,
    expected: &'static str,
    v: &EbValue,
) -> Result<T, EvalError> {
    Err(EvalError::KindMismatch {
        node: node.to_string(),
        expected,
        found: v.type_name(),
    })
}

fn as_set<'a>(v: &'a EbValue, node: &Expr) -> Result<Cow<'a, BTreeSet<Scalar>>, EvalError> {
    match v {
        EbValue::Set(s) => Ok(Cow::Borrowed(s)),
        EbValue::Rel(r) if r.is_empty() => Ok(Cow::Owned(BTreeSet::new())),
        _ => kind_error(node, "set", v),
    }
}

fn as_rel<'a>(v: &'a EbValue, node: &Expr) -> Result<Cow<'a, Pairs>, EvalError> {
    match v {
        EbValue::Rel(r) => Ok(Cow::Borrowed(r)),
        EbValue::Set(s) if s.is_empty() => Ok(Cow::Owned(BTreeSet::new())),
        _ => kind_error(node, "relation", v),
    }
}

fn is_rel(v: &EbValue) -> bool {
    matches!(v, EbValue::Rel(r) if !r.is_empty())
}

fn as_scalar(v: &EbValue) -> Option<Scalar> {
    match v {
        EbValue::Int(i) => Some(Scalar::Int(i.clone())),
        EbValue::Bool(b) => Some(Scalar::Bool(*b)),
        _ => None,
    }
}

/// Applies a set-algebra operator elementwise; relations are sets of pairs.
fn set_algebra(op: BinOp, l: &EbValue, r: &EbValue, node: &Expr) -> Result<EbValue, EvalError> {
    fn apply<T: Ord + Clone>(op: BinOp, a: &BTreeSet<T>, b: &BTreeSet<T>) -> BTreeSet<T> {
        match op {
            BinOp::Union => a.union(b).cloned().collect(),
            BinOp::Inter => a.intersection(b).cloned().collect(),
            BinOp::Diff => a.difference(b).cloned().collect(),
            _ => unreachable!("not a set-algebra operator"),
        }
    }
    if is_rel(l) || is_rel(r) {
        let (a, b) = (as_rel(l, node)?, as_rel(r, node)?);
        Ok(EbValue::from_pairs(apply(op, &a, &b)))
    } else {
        let (a, b) = (as_set(l, node)?, as_set(r, node)?);
        Ok(EbValue::Set(apply(op, &a, &b)))
    }
}

fn compose(first: &Pairs, second: &Pairs) -> Pairs {
    let mut out = BTreeSet::new();
    for (x, z) in first {
        for (z2, y) in second {
            if z == z2 {
                out.insert((x.clone(), y.clone()));
            }
        }
    }
    out
}

pub fn eval_expr(e: &Expr, m: &MachineState) -> Result<EbValue, EvalError> {
    match e {
        Expr::Var(v) => m
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Expr::Int(i) => Ok(EbValue::Int(i.clone())),
        Expr::Bool(b) => Ok(EbValue::Bool(*b)),
        Expr::SetLit(xs) => Ok(EbValue::set_of(xs.iter().cloned())),
        Expr::RelLit(xs) => Ok(EbValue::rel_of(xs.iter().cloned())),
        Expr::Unary(op, inner) => {
            let v = eval_expr(inner, m)?;
            match op {
                UnOp::Card => match &v {
                    EbValue::Set(s) => Ok(EbValue::Int(BigInt::from(s.len()))),
                    EbValue::Rel(r) => Ok(EbValue::Int(BigInt::from(r.len()))),
                    _ => kind_error(e, "collection", &v),
                },
                UnOp::Dom => Ok(EbValue::Set(
                    as_rel(&v, e)?.iter().map(|(x, _)| x.clone()).collect(),
                )),
                UnOp::Ran => Ok(EbValue::Set(
                    as_rel(&v, e)?.iter().map(|(_, y)| y.clone()).collect(),
                )),
                UnOp::Inverse => Ok(EbValue::from_pairs(
                    as_rel(&v, e)?
                        .iter()
                        .map(|(x, y)| (y.clone(), x.clone()))
                        .collect(),
                )),
            }
        }
        Expr::Binary(op, l, r) => {
            let lv = eval_expr(l, m)?;
            let rv = eval_expr(r, m)?;
            match op {
                BinOp::Union | BinOp::Inter | BinOp::Diff => set_algebra(*op, &lv, &rv, e),
                BinOp::CProd => {
                    let (a, b) = (as_set(&lv, e)?, as_set(&rv, e)?);
                    Ok(EbValue::from_pairs(
                        a.iter()
                            .flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone())))
                            .collect(),
                    ))
                }
                BinOp::DomRes | BinOp::DomSub => {
                    let s = as_set(&lv, e)?;
                    let keep = *op == BinOp::DomRes;
                    Ok(EbValue::from_pairs(
                        as_rel(&rv, e)?
                            .iter()
                            .filter(|(x, _)| s.contains(x) == keep)
                            .cloned()
                            .collect(),
                    ))
                }
                BinOp::RanRes | BinOp::RanSub => {
                    let s = as_set(&rv, e)?;
                    let keep = *op == BinOp::RanRes;
                    Ok(EbValue::from_pairs(
                        as_rel(&lv, e)?
                            .iter()
                            .filter(|(_, y)| s.contains(y) == keep)
                            .cloned()
                            .collect(),
                    ))
                }
                BinOp::FComp => Ok(EbValue::from_pairs(compose(
                    &*as_rel(&lv, e)?,
                    &*as_rel(&rv, e)?,
                ))),
                // r1 circ r2 = r2 ; r1
                BinOp::BComp => Ok(EbValue::from_pairs(compose(
                    &*as_rel(&rv, e)?,
                    &*as_rel(&lv, e)?,
                ))),
                // r1 <+ r2 = r2 \/ (dom(r2) <<| r1)
                BinOp::Ovl => {
                    let (r1, r2) = (as_rel(&lv, e)?, as_rel(&rv, e)?);
                    let keys: BTreeSet<Scalar> = r2.iter().map(|(x, _)| x.clone()).collect();
                    let mut out: Pairs = r2.into_owned();
                    out.extend(r1.iter().filter(|(x, _)| !keys.contains(x)).cloned());
                    Ok(EbValue::from_pairs(out))
                }
                BinOp::Image => {
                    let (rel, s) = (as_rel(&lv, e)?, as_set(&rv, e)?);
                    Ok(EbValue::Set(
                        rel.iter()
                            .filter(|(x, _)| s.contains(x))
                            .map(|(_, y)| y.clone())
                            .collect(),
                    ))
                }
            }
        }
    }
}

fn subset(a: &EbValue, b: &EbValue, node: &Expr) -> Result<bool, EvalError> {
    if is_rel(a) || is_rel(b) {
        Ok(as_rel(a, node)?.is_subset(&*as_rel(b, node)?))
    } else {
        Ok(as_set(a, node)?.is_subset(&*as_set(b, node)?))
    }
}

pub fn eval_pred(p: &Pred, m: &MachineState) -> Result<bool, EvalError> {
    match p {
        Pred::Not(q) => Ok(!eval_pred(q, m)?),
        Pred::And(a, b) => Ok(eval_pred(a, m)? && eval_pred(b, m)?),
        Pred::Or(a, b) => Ok(eval_pred(a, m)? || eval_pred(b, m)?),
        Pred::Eq(a, b) => {
            let (x, y) = (eval_expr(a, m)?, eval_expr(b, m)?);
            match (&x, &y) {
                (EbValue::Int(_), EbValue::Int(_)) | (EbValue::Bool(_), EbValue::Bool(_)) => {
                    Ok(x == y)
                }
                (EbValue::Set(_) | EbValue::Rel(_), EbValue::Set(_) | EbValue::Rel(_)) => {
                    Ok(x == y)
                }
                _ => Err(EvalError::KindMismatch {
                    node: p.to_string(),
                    expected: x.type_name(),
                    found: y.type_name(),
                }),
            }
        }
        Pred::In(x, s) => {
            let xv = eval_expr(x, m)?;
            let elem = match as_scalar(&xv) {
                Some(v) => v,
                None => return kind_error(x, "scalar", &xv),
            };
            let sv = eval_expr(s, m)?;
            Ok(as_set(&sv, s)?.contains(&elem))
        }
        Pred::SubsetEq(a, b) => {
            let (x, y) = (eval_expr(a, m)?, eval_expr(b, m)?);
            subset(&x, &y, a)
        }
        Pred::Subset(a, b) => {
            let (x, y) = (eval_expr(a, m)?, eval_expr(b, m)?);
            Ok(subset(&x, &y, a)? && x != y)
        }
    }
}

pub fn eval_formula(f: &Formula, m: &MachineState) -> Result<EbValue, EvalError> {
    match f {
        Formula::Expr(e) => eval_expr(e, m),
        Formula::Pred(p) => eval_pred(p, m).map(EbValue::Bool),
    }
}

/// `[v -> E(m)]m`
pub fn apply_assignment(a: &Assignment, m: &MachineState) -> Result<MachineState, EvalError> {
    Ok(m.bind(a.target.clone(), eval_expr(&a.rhs, m)?))
}

/// Simultaneous assignment: every right-hand side is evaluated in `m`
/// before any variable is rebound.
pub fn eval_actions(actions: &ActionSet, m: &MachineState) -> Result<MachineState, EvalError> {
    let rebinds = actions
        .assignments()
        .iter()
        .map(|a| Ok((a.target.as_str(), eval_expr(&a.rhs, m)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(rebinds
        .into_iter()
        .fold(m.clone(), |state, (v, value)| state.bind(v, value)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eb::{parse_actions, parse_expr};

    fn set(xs: &[i64]) -> EbValue {
        EbValue::set_of(xs.iter().map(|&x| Scalar::int(x)))
    }

    fn rel(xs: &[(i64, i64)]) -> EbValue {
        EbValue::rel_of(xs.iter().map(|&(a, b)| (Scalar::int(a), Scalar::int(b))))
    }

    fn state(bindings: &[(&str, EbValue)]) -> MachineState {
        bindings
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    fn eval(src: &str, m: &MachineState) -> EbValue {
        eval_formula(&parse_expr(src).unwrap(), m).unwrap()
    }

    // Brute-force oracles over explicit pair lists, independent of the
    // set-based evaluator above.
    fn oracle_override(r1: &[(i64, i64)], r2: &[(i64, i64)]) -> Vec<(i64, i64)> {
        let mut out: Vec<(i64, i64)> = r2.to_vec();
        for &(x, y) in r1 {
            if !r2.iter().any(|&(k, _)| k == x) {
                out.push((x, y));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn oracle_image(r: &[(i64, i64)], s: &[i64]) -> Vec<i64> {
        let mut out = Vec::new();
        for &(x, y) in r {
            for &e in s {
                if x == e {
                    out.push(y);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn union() {
        let m = state(&[("s", set(&[1, 2])), ("t", set(&[2, 3]))]);
        assert_eq!(eval("s \\/ t", &m), set(&[1, 2, 3]));
    }

    #[test]
    fn domain() {
        let m = state(&[("r", rel(&[(1, 2), (3, 2)]))]);
        assert_eq!(eval("dom(r)", &m), set(&[1, 3]));
    }

    #[test]
    fn overriding_matches_oracle() {
        let r = [(1, 10), (2, 20)];
        let r1 = [(2, 99), (3, 30)];
        let expected = oracle_override(&r, &r1);
        assert_eq!(expected, vec![(1, 10), (2, 99), (3, 30)]);
        let m = state(&[("r", rel(&r)), ("r1", rel(&r1))]);
        assert_eq!(eval("r <+ r1", &m), rel(&expected));
    }

    #[test]
    fn image_matches_oracle() {
        let r = [(1, 5), (1, 6), (2, 7)];
        let expected = oracle_image(&r, &[1]);
        assert_eq!(expected, vec![5, 6]);
        let m = state(&[("r", rel(&r)), ("s", set(&[1]))]);
        assert_eq!(
            eval("r[s]", &m),
            EbValue::set_of(expected.into_iter().map(Scalar::int))
        );
    }

    #[test]
    fn remaining_operators() {
        let m = state(&[
            ("s", set(&[1, 2])),
            ("t", set(&[2, 3])),
            ("r", rel(&[(1, 2), (2, 3), (3, 1)])),
        ]);
        assert_eq!(eval("s /\\ t", &m), set(&[2]));
        assert_eq!(eval("s \\ t", &m), set(&[1]));
        assert_eq!(eval("card(s \\/ t)", &m), EbValue::int(3));
        assert_eq!(eval("{1} ** t", &m), rel(&[(1, 2), (1, 3)]));
        assert_eq!(eval("ran(r)", &m), set(&[1, 2, 3]));
        assert_eq!(eval("s <| r", &m), rel(&[(1, 2), (2, 3)]));
        assert_eq!(eval("s <<| r", &m), rel(&[(3, 1)]));
        assert_eq!(eval("r |> s", &m), rel(&[(1, 2), (3, 1)]));
        assert_eq!(eval("r |>> s", &m), rel(&[(2, 3)]));
        assert_eq!(eval("r ; r", &m), rel(&[(1, 3), (2, 1), (3, 2)]));
        assert_eq!(eval("r~", &m), rel(&[(2, 1), (3, 2), (1, 3)]));
        assert_eq!(eval("{2 |-> 7} circ {1 |-> 2}", &m), rel(&[(1, 7)]));
        assert_eq!(eval("{1 |-> 2} circ {2 |-> 7}", &m), EbValue::empty());
        assert_eq!(eval("s \\ s", &m), EbValue::empty());
        assert_eq!(eval("r \\ r", &m), EbValue::empty());
    }

    #[test]
    fn predicates() {
        let m = state(&[("s", set(&[1, 2])), ("t", set(&[1]))]);
        assert_eq!(eval("card(s) = 2 & not (3 : t)", &m), EbValue::Bool(true));
        assert_eq!(eval("t <<: s", &m), EbValue::Bool(true));
        assert_eq!(eval("s <<: s", &m), EbValue::Bool(false));
        assert_eq!(eval("s <: s", &m), EbValue::Bool(true));
        assert_eq!(eval("s = t or 1 : t", &m), EbValue::Bool(true));
        // the conjunction uses both operands
        assert_eq!(eval("1 : t & 2 : t", &m), EbValue::Bool(false));
        assert_eq!(eval("{} = s \\ s", &m), EbValue::Bool(true));
    }

    #[test]
    fn empty_collections_interoperate() {
        let m = state(&[("r", EbValue::empty()), ("s", set(&[1]))]);
        assert_eq!(eval("dom(r)", &m), EbValue::empty());
        assert_eq!(eval("r \\/ {1 |-> 2}", &m), rel(&[(1, 2)]));
        assert_eq!(eval("s <| r", &m), EbValue::empty());
    }

    #[test]
    fn kind_errors() {
        let m = state(&[("s", set(&[1])), ("r", rel(&[(1, 1)]))]);
        let e = parse_expr("dom(s)").unwrap();
        assert!(matches!(
            eval_formula(&e, &m),
            Err(EvalError::KindMismatch { .. })
        ));
        let e = parse_expr("s \\/ r").unwrap();
        assert!(eval_formula(&e, &m).is_err());
        let e = parse_expr("zz").unwrap();
        assert_eq!(
            eval_formula(&e, &m),
            Err(EvalError::UnboundVariable("zz".into()))
        );
    }

    #[test]
    fn single_assignments() {
        let m = state(&[("s", set(&[1]))]);
        let a = Assignment::new("s", parse_expr_e("s \\/ {3}"));
        assert_eq!(
            apply_assignment(&a, &m).unwrap(),
            state(&[("s", set(&[1, 3]))])
        );
        let a = Assignment::new("s", Expr::var("s"));
        assert_eq!(apply_assignment(&a, &m).unwrap(), m);

        let r = [(1, 2), (3, 4)];
        // brute force: keep pairs whose key is not 1
        let expected: Vec<_> = r.iter().copied().filter(|&(k, _)| k != 1).collect();
        let m = state(&[("r", rel(&r))]);
        let a = Assignment::new("r", parse_expr_e("{1} <<| r"));
        assert_eq!(
            apply_assignment(&a, &m).unwrap(),
            state(&[("r", rel(&expected))])
        );
    }

    fn parse_expr_e(src: &str) -> Expr {
        match parse_expr(src).unwrap() {
            Formula::Expr(e) => e,
            Formula::Pred(_) => unreachable!(),
        }
    }

    #[test]
    fn action_sets() {
        let m = state(&[("s", set(&[1])), ("t", set(&[2]))]);
        assert_eq!(eval_actions(&ActionSet::empty(), &m).unwrap(), m);

        let swap = parse_actions("s := t || t := s").unwrap();
        assert_eq!(
            eval_actions(&swap, &m).unwrap(),
            state(&[("s", set(&[2])), ("t", set(&[1]))])
        );

        let m = state(&[("s", EbValue::empty()), ("r", EbValue::empty())]);
        let two = parse_actions("s := s \\/ {9} || r := r <+ {1 |-> 1}").unwrap();
        assert_eq!(
            eval_actions(&two, &m).unwrap(),
            state(&[("s", set(&[9])), ("r", rel(&[(1, 1)]))])
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_set() -> impl Strategy<Value = EbValue> {
            proptest::collection::btree_set(-3i64..=3, 0..5)
                .prop_map(|s| EbValue::set_of(s.into_iter().map(Scalar::int)))
        }

        fn small_rel() -> impl Strategy<Value = EbValue> {
            proptest::collection::btree_set((-2i64..=2, -2i64..=2), 0..6).prop_map(|s| {
                EbValue::rel_of(s.into_iter().map(|(a, b)| (Scalar::int(a), Scalar::int(b))))
            })
        }

        proptest! {
            #[test]
            fn overriding_is_definitional(r1 in small_rel(), r2 in small_rel()) {
                let m = state(&[("r1", r1), ("r2", r2)]);
                prop_assert_eq!(eval("r1 <+ r2", &m), eval("r2 \\/ (dom(r2) <<| r1)", &m));
            }

            #[test]
            fn backward_composition(r1 in small_rel(), r2 in small_rel()) {
                let m = state(&[("r1", r1), ("r2", r2)]);
                prop_assert_eq!(eval("r1 circ r2", &m), eval("r2 ; r1", &m));
            }

            #[test]
            fn inclusion_exclusion(s in small_set(), t in small_set()) {
                let m = state(&[("s", s), ("t", t)]);
                let card = |src: &str| match eval(src, &m) {
                    EbValue::Int(i) => i,
                    other => panic!("{other}"),
                };
                prop_assert_eq!(
                    card("card(s \\/ t)") + card("card(s /\\ t)"),
                    card("card(s)") + card("card(t)")
                );
            }

            #[test]
            fn assignment_order_is_irrelevant(
                s in small_set(), t in small_set(), r in small_rel()
            ) {
                let m = state(&[("s", s), ("t", t), ("r", r)]);
                let forward = parse_actions("s := t \\ s || t := s \\/ dom(r) || r := r |>> s").unwrap();
                let backward = parse_actions("r := r |>> s || t := s \\/ dom(r) || s := t \\ s").unwrap();
                prop_assert_eq!(eval_actions(&forward, &m).unwrap(), eval_actions(&backward, &m).unwrap());
            }
        }
    }
}
