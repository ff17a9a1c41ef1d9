use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::model::{Scalar, ScalarKind};

/// Type of an Event-B expression. Collections hold scalars only; there are
/// no nested sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EbType {
    Int,
    Bool,
    Set(ScalarKind),
    Rel(ScalarKind, ScalarKind),
}

impl EbType {
    pub fn is_collection(&self) -> bool {
        matches!(self, EbType::Set(_) | EbType::Rel(..))
    }
}

impl fmt::Display for EbType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EbType::Int => f.write_str("int"),
            EbType::Bool => f.write_str("bool"),
            EbType::Set(k) => write!(f, "set({k})"),
            EbType::Rel(a, b) => write!(f, "{a} <-> {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Card,
    Dom,
    Ran,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Union,
    Inter,
    Diff,
    CProd,
    /// `s <| r`
    DomRes,
    /// `s <<| r`
    DomSub,
    /// `r |> s`
    RanRes,
    /// `r |>> s`
    RanSub,
    /// `r1 ; r2`
    FComp,
    /// `r1 circ r2`
    BComp,
    /// `r1 <+ r2`
    Ovl,
    /// `r[s]`
    Image,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Union => "\\/",
            BinOp::Inter => "/\\",
            BinOp::Diff => "\\",
            BinOp::CProd => "**",
            BinOp::DomRes => "<|",
            BinOp::DomSub => "<<|",
            BinOp::RanRes => "|>",
            BinOp::RanSub => "|>>",
            BinOp::FComp => ";",
            BinOp::BComp => "circ",
            BinOp::Ovl => "<+",
            BinOp::Image => "[]",
        }
    }

    /// Binding strength of an infix operator; larger binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Union | BinOp::Diff => 1,
            BinOp::Inter => 2,
            BinOp::CProd => 3,
            BinOp::DomRes | BinOp::DomSub | BinOp::RanRes | BinOp::RanSub => 4,
            BinOp::FComp | BinOp::BComp | BinOp::Ovl => 5,
            BinOp::Image => 6,
        }
    }

    pub const ALL: [BinOp; 12] = [
        BinOp::Union,
        BinOp::Inter,
        BinOp::Diff,
        BinOp::CProd,
        BinOp::DomRes,
        BinOp::DomSub,
        BinOp::RanRes,
        BinOp::RanSub,
        BinOp::FComp,
        BinOp::BComp,
        BinOp::Ovl,
        BinOp::Image,
    ];
}

/// Event-B expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Int(BigInt),
    Bool(bool),
    SetLit(Vec<Scalar>),
    RelLit(Vec<(Scalar, Scalar)>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn int(v: i64) -> Self {
        Expr::Int(BigInt::from(v))
    }

    pub fn from_scalar(x: Scalar) -> Self {
        match x {
            Scalar::Int(i) => Expr::Int(i),
            Scalar::Bool(b) => Expr::Bool(b),
        }
    }

    pub fn set_lit(xs: impl IntoIterator<Item = i64>) -> Self {
        Expr::SetLit(xs.into_iter().map(Scalar::int).collect())
    }

    pub fn rel_lit(xs: impl IntoIterator<Item = (i64, i64)>) -> Self {
        Expr::RelLit(
            xs.into_iter()
                .map(|(a, b)| (Scalar::int(a), Scalar::int(b)))
                .collect(),
        )
    }

    pub fn unary(op: UnOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn card(e: Expr) -> Self {
        Expr::unary(UnOp::Card, e)
    }

    pub fn dom(e: Expr) -> Self {
        Expr::unary(UnOp::Dom, e)
    }

    pub fn ran(e: Expr) -> Self {
        Expr::unary(UnOp::Ran, e)
    }

    pub fn inverse(e: Expr) -> Self {
        Expr::unary(UnOp::Inverse, e)
    }

    pub fn union(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Union, l, r)
    }

    pub fn inter(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Inter, l, r)
    }

    pub fn diff(l: Expr, r: Expr) -> Self {
        Expr::binary(BinOp::Diff, l, r)
    }

    /// Number of AST nodes; literal elements count one each.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) => 1,
            Expr::SetLit(xs) => 1 + xs.len(),
            Expr::RelLit(xs) => 1 + xs.len(),
            Expr::Unary(_, e) => 1 + e.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
            _ => 0,
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, e) => e.free_vars(out),
            Expr::Binary(_, l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
            _ => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            _ => u8::MAX,
        }
    }
}

/// Event-B predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pred {
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Eq(Expr, Expr),
    /// `x : s`
    In(Expr, Expr),
    /// `s1 <<: s2`
    Subset(Expr, Expr),
    /// `s1 <: s2`
    SubsetEq(Expr, Expr),
}

impl Pred {
    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Pred) -> Self {
        Pred::Not(Box::new(p))
    }

    pub fn and(a: Pred, b: Pred) -> Self {
        Pred::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Pred, b: Pred) -> Self {
        Pred::Or(Box::new(a), Box::new(b))
    }

    pub fn size(&self) -> usize {
        match self {
            Pred::Not(p) => 1 + p.size(),
            Pred::And(a, b) | Pred::Or(a, b) => 1 + a.size() + b.size(),
            Pred::Eq(a, b) | Pred::In(a, b) | Pred::Subset(a, b) | Pred::SubsetEq(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Connectives and atoms each add one level above their operands.
    pub fn depth(&self) -> usize {
        match self {
            Pred::Not(p) => 1 + p.depth(),
            Pred::And(a, b) | Pred::Or(a, b) => 1 + a.depth().max(b.depth()),
            Pred::Eq(a, b) | Pred::In(a, b) | Pred::Subset(a, b) | Pred::SubsetEq(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Pred::Or(..) => 1,
            Pred::And(..) => 2,
            Pred::Not(_) => 3,
            _ => 4,
        }
    }
}

/// Result of parsing a formula: either an expression or a predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Expr(Expr),
    Pred(Pred),
}

impl Formula {
    pub fn size(&self) -> usize {
        match self {
            Formula::Expr(e) => e.size(),
            Formula::Pred(p) => p.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Expr(e) => e.depth(),
            Formula::Pred(p) => p.depth(),
        }
    }
}

impl From<Expr> for Formula {
    fn from(e: Expr) -> Self {
        Formula::Expr(e)
    }
}

impl From<Pred> for Formula {
    fn from(p: Pred) -> Self {
        Formula::Pred(p)
    }
}

/// `target := rhs`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub target: String,
    pub rhs: Expr,
}

impl Assignment {
    pub fn new(target: impl Into<String>, rhs: Expr) -> Self {
        Assignment {
            target: target.into(),
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable `{0}` is assigned more than once")]
pub struct DuplicateTarget(pub String);

/// Simultaneous assignments `a1 || a2 || ...`; each variable is assigned at
/// most once. The empty set of actions is `λ`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ActionSet {
    assignments: Vec<Assignment>,
}

impl ActionSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(assignments: Vec<Assignment>) -> Result<Self, DuplicateTarget> {
        let mut seen = BTreeSet::new();
        for a in &assignments {
            if !seen.insert(a.target.as_str()) {
                return Err(DuplicateTarget(a.target.clone()));
            }
        }
        Ok(ActionSet { assignments })
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn size(&self) -> usize {
        self.assignments.iter().map(|a| 1 + a.rhs.size()).sum()
    }
}

fn write_scalar_list(f: &mut fmt::Formatter<'_>, xs: &[Scalar]) -> fmt::Result {
    f.write_str("{")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str("}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::SetLit(xs) => write_scalar_list(f, xs),
            Expr::RelLit(xs) => {
                f.write_str("{")?;
                for (i, (a, b)) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a} |-> {b}")?;
                }
                f.write_str("}")
            }
            Expr::Unary(UnOp::Card, e) => write!(f, "card({e})"),
            Expr::Unary(UnOp::Dom, e) => write!(f, "dom({e})"),
            Expr::Unary(UnOp::Ran, e) => write!(f, "ran({e})"),
            Expr::Unary(UnOp::Inverse, e) => {
                if e.precedence() == u8::MAX {
                    write!(f, "{e}~")
                } else {
                    write!(f, "({e})~")
                }
            }
            Expr::Binary(BinOp::Image, r, s) => {
                if r.precedence() == u8::MAX {
                    write!(f, "{r}[{s}]")
                } else {
                    write!(f, "({r})[{s}]")
                }
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                // left-associative: the right operand needs parens at equal precedence
                if l.precedence() < p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if r.precedence() <= p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, p: &Pred, min: u8| {
            if p.precedence() < min {
                write!(f, "({p})")
            } else {
                write!(f, "{p}")
            }
        };
        match self {
            Pred::Not(p) => {
                f.write_str("not ")?;
                sub(f, p, 3)
            }
            Pred::And(a, b) => {
                sub(f, a, 2)?;
                f.write_str(" & ")?;
                sub(f, b, 3)
            }
            Pred::Or(a, b) => {
                sub(f, a, 1)?;
                f.write_str(" or ")?;
                sub(f, b, 2)
            }
            Pred::Eq(a, b) => write!(f, "{a} = {b}"),
            Pred::In(a, b) => write!(f, "{a} : {b}"),
            Pred::Subset(a, b) => write!(f, "{a} <<: {b}"),
            Pred::SubsetEq(a, b) => write!(f, "{a} <: {b}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Expr(e) => write!(f, "{e}"),
            Formula::Pred(p) => write!(f, "{p}"),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.target, self.rhs)
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.assignments.iter().enumerate() {
            if i > 0 {
                f.write_str(" || ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
