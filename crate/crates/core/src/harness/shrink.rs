//! Greedy reduction of failing cases.

use std::fmt;

use thiserror::Error;

use crate::eb::{
    typecheck_actions, typecheck_formula, ActionSet, Expr, Formula, Pred, TypeEnv, UnOp,
};
use crate::model::Database;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Program {
    Formula(Formula),
    Actions(ActionSet),
}

impl Program {
    pub fn size(&self) -> usize {
        match self {
            Program::Formula(f) => f.size(),
            Program::Actions(a) => a.size(),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Formula(x) => write!(f, "{x}"),
            Program::Actions(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub program: Program,
    pub db: Database,
    pub env: TypeEnv,
}

impl Case {
    /// Program nodes plus table rows.
    pub fn measure(&self) -> usize {
        self.program.size() + self.db.total_rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("the case to shrink does not fail")]
pub struct NotFailing;

fn is_empty_lit(e: &Expr) -> bool {
    matches!(e, Expr::SetLit(xs) if xs.is_empty()) || matches!(e, Expr::RelLit(xs) if xs.is_empty())
}

/// Expressions obtained by replacing one subterm with something smaller.
fn expr_variants(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    match e {
        Expr::Unary(op, x) => {
            out.push((**x).clone());
            if *op == UnOp::Card {
                out.push(Expr::int(0));
            }
            out.extend(expr_variants(x).into_iter().map(|v| Expr::unary(*op, v)));
        }
        Expr::Binary(op, l, r) => {
            out.push((**l).clone());
            out.push((**r).clone());
            out.extend(
                expr_variants(l)
                    .into_iter()
                    .map(|v| Expr::binary(*op, v, (**r).clone())),
            );
            out.extend(
                expr_variants(r)
                    .into_iter()
                    .map(|v| Expr::binary(*op, (**l).clone(), v)),
            );
        }
        Expr::SetLit(xs) => {
            for i in 0..xs.len() {
                let mut ys = xs.clone();
                ys.remove(i);
                out.push(Expr::SetLit(ys));
            }
        }
        Expr::RelLit(ps) => {
            for i in 0..ps.len() {
                let mut qs = ps.clone();
                qs.remove(i);
                out.push(Expr::RelLit(qs));
            }
        }
        Expr::Int(i) if *i != 0.into() => out.push(Expr::int(0)),
        Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
    }
    if e.size() > 1 && !is_empty_lit(e) {
        out.push(Expr::SetLit(vec![]));
    }
    out
}

fn pred_variants(p: &Pred) -> Vec<Pred> {
    let mut out = Vec::new();
    let atom = |out: &mut Vec<Pred>, a: &Expr, b: &Expr, mk: fn(Expr, Expr) -> Pred| {
        out.extend(expr_variants(a).into_iter().map(|v| mk(v, b.clone())));
        out.extend(expr_variants(b).into_iter().map(|v| mk(a.clone(), v)));
    };
    match p {
        Pred::Not(q) => {
            out.push((**q).clone());
            out.extend(pred_variants(q).into_iter().map(Pred::not));
        }
        Pred::And(a, b) | Pred::Or(a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            let join = if matches!(p, Pred::And(..)) {
                Pred::and
            } else {
                Pred::or
            };
            out.extend(pred_variants(a).into_iter().map(|v| join(v, (**b).clone())));
            out.extend(pred_variants(b).into_iter().map(|v| join((**a).clone(), v)));
        }
        Pred::Eq(a, b) => atom(&mut out, a, b, Pred::Eq),
        Pred::In(a, b) => atom(&mut out, a, b, Pred::In),
        Pred::Subset(a, b) => atom(&mut out, a, b, Pred::Subset),
        Pred::SubsetEq(a, b) => atom(&mut out, a, b, Pred::SubsetEq),
    }
    out
}

fn program_variants(p: &Program, env: &TypeEnv) -> Vec<Program> {
    match p {
        Program::Formula(Formula::Expr(e)) => expr_variants(e)
            .into_iter()
            .map(Formula::Expr)
            .filter(|f| typecheck_formula(f, env).is_ok())
            .map(Program::Formula)
            .collect(),
        Program::Formula(Formula::Pred(q)) => pred_variants(q)
            .into_iter()
            .map(Formula::Pred)
            .filter(|f| typecheck_formula(f, env).is_ok())
            .map(Program::Formula)
            .collect(),
        Program::Actions(acts) => {
            let list = acts.assignments();
            let mut out = Vec::new();
            for i in 0..list.len() {
                let mut fewer = list.to_vec();
                fewer.remove(i);
                out.push(fewer);
            }
            for (i, a) in list.iter().enumerate() {
                for v in expr_variants(&a.rhs) {
                    let mut changed = list.to_vec();
                    changed[i].rhs = v;
                    out.push(changed);
                }
            }
            out.into_iter()
                .filter_map(|v| ActionSet::new(v).ok())
                .filter(|a| typecheck_actions(a, env).is_ok())
                .map(Program::Actions)
                .collect()
        }
    }
}

fn db_variants(db: &Database) -> Vec<Database> {
    let mut out = Vec::new();
    for (name, rel) in db.iter() {
        for row in rel.rows() {
            let mut smaller = rel.clone();
            smaller.retain(|r| r != row);
            out.push(db.update(name, smaller));
        }
    }
    out
}

/// Repeatedly takes the first strictly smaller variant that still fails.
/// Program reductions are tried before row removals.
pub fn shrink(case: &Case, fails: impl Fn(&Case) -> bool) -> Result<Case, NotFailing> {
    if !fails(case) {
        return Err(NotFailing);
    }
    let mut current = case.clone();
    'outer: loop {
        let size = current.measure();
        let programs = program_variants(&current.program, &current.env)
            .into_iter()
            .map(|p| Case {
                program: p,
                db: current.db.clone(),
                env: current.env.clone(),
            });
        let dbs = db_variants(&current.db).into_iter().map(|db| Case {
            program: current.program.clone(),
            db,
            env: current.env.clone(),
        });
        for cand in programs.chain(dbs) {
            if cand.measure() < size && fails(&cand) {
                current = cand;
                continue 'outer;
            }
        }
        return Ok(current);
    }
}
