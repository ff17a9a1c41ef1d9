//! Type-directed random generation of databases, formulas and action sets.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eb::{ActionSet, Assignment, BinOp, EbType, Expr, Formula, Pred, TypeEnv};
use crate::model::{Database, Relation, Scalar, ScalarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no variable of type {0} to generate from")]
    Unsatisfiable(String),
    #[error("the scalar universe is empty")]
    EmptyUniverse,
}

/// Scalars elements are drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub ints: RangeInclusive<i64>,
    pub bools: bool,
}

impl Universe {
    pub fn kinds(&self) -> Vec<ScalarKind> {
        let mut out = Vec::new();
        if !self.ints.is_empty() {
            out.push(ScalarKind::Int);
        }
        if self.bools {
            out.push(ScalarKind::Bool);
        }
        out
    }

    fn draw(&self, rng: &mut impl Rng, kind: ScalarKind) -> Scalar {
        match kind {
            ScalarKind::Int => Scalar::int(rng.gen_range(self.ints.clone())),
            ScalarKind::Bool => Scalar::Bool(rng.gen()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    pub num_vars: usize,
    pub universe: Universe,
    pub max_set_size: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 5,
            num_vars: 4,
            universe: Universe {
                ints: -4..=4,
                bools: true,
            },
            max_set_size: 6,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.universe.kinds().is_empty() {
            return Err(GenError::EmptyUniverse);
        }
        Ok(())
    }
}

/// Per-case seed derived from the run seed and the case index.
pub fn case_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(case_seed(seed, index))
}

pub(crate) struct Gen<'a, R: Rng> {
    pub(crate) rng: &'a mut R,
    pub(crate) cfg: &'a GenConfig,
    pub(crate) env: &'a TypeEnv,
    kinds: Vec<ScalarKind>,
}

impl<'a, R: Rng> Gen<'a, R> {
    pub(crate) fn new(rng: &'a mut R, cfg: &'a GenConfig, env: &'a TypeEnv) -> Self {
        let kinds = cfg.universe.kinds();
        Gen {
            rng,
            cfg,
            env,
            kinds,
        }
    }

    fn kind(&mut self) -> ScalarKind {
        // integers dominate so that joins and deletes see collisions
        if self.kinds.contains(&ScalarKind::Int)
            && (self.kinds.len() == 1 || self.rng.gen_bool(0.8))
        {
            ScalarKind::Int
        } else {
            self.kinds[self.kinds.len() - 1]
        }
    }

    fn coll_type(&mut self) -> EbType {
        let known: Vec<EbType> = self
            .env
            .values()
            .copied()
            .filter(EbType::is_collection)
            .collect();
        if !known.is_empty() && self.rng.gen_bool(0.7) {
            return *known.choose(self.rng).expect("non-empty");
        }
        if self.rng.gen_bool(0.5) {
            EbType::Set(self.kind())
        } else {
            EbType::Rel(self.kind(), self.kind())
        }
    }

    fn vars_of(&self, ty: EbType) -> Vec<&'a String> {
        self.env
            .iter()
            .filter(|(_, t)| **t == ty)
            .map(|(n, _)| n)
            .collect()
    }

    fn elements(&mut self, kind: ScalarKind, max: usize) -> Vec<Scalar> {
        let n = self.rng.gen_range(0..=max);
        let set: BTreeSet<Scalar> = (0..n)
            .map(|_| self.cfg.universe.draw(self.rng, kind))
            .collect();
        set.into_iter().collect()
    }

    fn pairs(&mut self, a: ScalarKind, b: ScalarKind, max: usize) -> Vec<(Scalar, Scalar)> {
        let n = self.rng.gen_range(0..=max);
        let set: BTreeSet<(Scalar, Scalar)> = (0..n)
            .map(|_| {
                (
                    self.cfg.universe.draw(self.rng, a),
                    self.cfg.universe.draw(self.rng, b),
                )
            })
            .collect();
        set.into_iter().collect()
    }

    fn leaf(&mut self, want: EbType) -> Expr {
        match want {
            EbType::Int => Expr::int(self.rng.gen_range(0..=self.cfg.max_set_size as i64)),
            EbType::Bool => Expr::Bool(self.rng.gen()),
            EbType::Set(_) | EbType::Rel(..) => {
                let vars = self.vars_of(want);
                let roll = self.rng.gen_range(0..100);
                if !vars.is_empty() && roll < 70 {
                    return Expr::var((*vars.choose(self.rng).expect("non-empty")).clone());
                }
                if roll >= 85 {
                    return Expr::SetLit(vec![]);
                }
                let max = self.cfg.max_set_size.min(3);
                match want {
                    EbType::Set(k) => Expr::SetLit(self.elements(k, max)),
                    EbType::Rel(a, b) => Expr::RelLit(self.pairs(a, b, max)),
                    _ => unreachable!(),
                }
            }
        }
    }

    pub(crate) fn expr(&mut self, want: EbType, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf(want);
        }
        let d = depth - 1;
        match want {
            EbType::Int => {
                if self.rng.gen_bool(0.3) {
                    self.leaf(want)
                } else {
                    let t = self.coll_type();
                    Expr::card(self.expr(t, d))
                }
            }
            EbType::Bool => self.leaf(want),
            EbType::Set(k) => match self.rng.gen_range(0..6) {
                0..=2 => {
                    let op = [BinOp::Union, BinOp::Inter, BinOp::Diff][self.rng.gen_range(0..3)];
                    Expr::binary(op, self.expr(want, d), self.expr(want, d))
                }
                3 => {
                    let x = self.kind();
                    Expr::dom(self.expr(EbType::Rel(k, x), d))
                }
                4 => {
                    let x = self.kind();
                    Expr::ran(self.expr(EbType::Rel(x, k), d))
                }
                _ => {
                    let x = self.kind();
                    Expr::binary(
                        BinOp::Image,
                        self.expr(EbType::Rel(x, k), d),
                        self.expr(EbType::Set(x), d),
                    )
                }
            },
            EbType::Rel(a, b) => {
                let op = [
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
                ][self.rng.gen_range(0..12)];
                match op {
                    BinOp::Union | BinOp::Inter | BinOp::Diff | BinOp::Ovl => {
                        Expr::binary(op, self.expr(want, d), self.expr(want, d))
                    }
                    BinOp::CProd => Expr::binary(
                        op,
                        self.expr(EbType::Set(a), d),
                        self.expr(EbType::Set(b), d),
                    ),
                    BinOp::DomRes | BinOp::DomSub => {
                        Expr::binary(op, self.expr(EbType::Set(a), d), self.expr(want, d))
                    }
                    BinOp::RanRes | BinOp::RanSub => {
                        Expr::binary(op, self.expr(want, d), self.expr(EbType::Set(b), d))
                    }
                    BinOp::FComp => {
                        let c = self.kind();
                        Expr::binary(
                            op,
                            self.expr(EbType::Rel(a, c), d),
                            self.expr(EbType::Rel(c, b), d),
                        )
                    }
                    BinOp::BComp => {
                        let c = self.kind();
                        Expr::binary(
                            op,
                            self.expr(EbType::Rel(c, b), d),
                            self.expr(EbType::Rel(a, c), d),
                        )
                    }
                    // the image slot stands in for inverse
                    _ => Expr::inverse(self.expr(EbType::Rel(b, a), d)),
                }
            }
        }
    }

    /// A predicate of depth at most `depth` (at least 1).
    pub(crate) fn pred(&mut self, depth: usize) -> Pred {
        let depth = depth.max(1);
        if depth > 1 && self.rng.gen_bool(0.3) {
            let d = depth - 1;
            return match self.rng.gen_range(0..3) {
                0 => Pred::not(self.pred(d)),
                1 => Pred::and(self.pred(d), self.pred(d)),
                _ => Pred::or(self.pred(d), self.pred(d)),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 | 1 => Pred::Eq(self.expr(EbType::Int, d), self.expr(EbType::Int, d)),
            2 => Pred::Eq(self.expr(EbType::Bool, d), self.expr(EbType::Bool, d)),
            3 | 4 => {
                let t = self.coll_type();
                Pred::Eq(self.expr(t, d), self.expr(t, d))
            }
            5 | 6 => {
                let k = self.kind();
                let x = match k {
                    ScalarKind::Int if self.rng.gen_bool(0.2) => self.expr(EbType::Int, d),
                    _ => Expr::from_scalar(self.cfg.universe.draw(self.rng, k)),
                };
                Pred::In(x, self.expr(EbType::Set(k), d))
            }
            7 => {
                let t = self.coll_type();
                Pred::Subset(self.expr(t, d), self.expr(t, d))
            }
            _ => {
                let t = self.coll_type();
                Pred::SubsetEq(self.expr(t, d), self.expr(t, d))
            }
        }
    }

    pub(crate) fn formula(&mut self) -> Formula {
        let depth = self.cfg.max_depth;
        let roll = self.rng.gen_range(0..100);
        if depth > 0 && roll < 25 {
            return Formula::Pred(self.pred(depth));
        }
        if roll < 35 {
            return Formula::Expr(self.expr(EbType::Int, depth));
        }
        let t = self.coll_type();
        Formula::Expr(self.expr(t, depth))
    }

    pub(crate) fn actions(&mut self) -> Result<ActionSet, GenError> {
        let targets: Vec<(&String, EbType)> = self
            .env
            .iter()
            .filter(|(_, t)| t.is_collection())
            .map(|(n, t)| (n, *t))
            .collect();
        if targets.is_empty() {
            return Err(GenError::Unsatisfiable("set or relation".into()));
        }
        let k = self.rng.gen_range(1..=targets.len().min(3));
        let chosen: Vec<_> = targets.choose_multiple(self.rng, k).cloned().collect();
        let depth = self.cfg.max_depth;
        let mut out = Vec::with_capacity(k);
        for (name, ty) in chosen {
            let rhs = if self.rng.gen_bool(0.6) {
                self.optimized_rhs(name, ty, depth.saturating_sub(1))
            } else {
                self.expr(ty, depth)
            };
            out.push(Assignment::new(name.clone(), rhs));
        }
        Ok(ActionSet::new(out).expect("targets are distinct"))
    }

    /// A right-hand side shaped for one of the special assignment rules.
    fn optimized_rhs(&mut self, target: &str, ty: EbType, d: usize) -> Expr {
        let v = Expr::var(target.to_string());
        match ty {
            EbType::Set(_) => {
                let op = [BinOp::Union, BinOp::Diff, BinOp::Inter][self.rng.gen_range(0..3)];
                Expr::binary(op, v, self.expr(ty, d))
            }
            EbType::Rel(a, b) => match self.rng.gen_range(0..5) {
                0 => Expr::binary(BinOp::Ovl, v, self.expr(ty, d)),
                1 => Expr::binary(BinOp::DomSub, self.expr(EbType::Set(a), d), v),
                2 => Expr::binary(BinOp::DomRes, self.expr(EbType::Set(a), d), v),
                3 => Expr::binary(BinOp::RanSub, v, self.expr(EbType::Set(b), d)),
                _ => Expr::binary(BinOp::RanRes, v, self.expr(EbType::Set(b), d)),
            },
            EbType::Int | EbType::Bool => unreachable!("targets are collections"),
        }
    }
}

pub(crate) fn gen_database_with(rng: &mut impl Rng, cfg: &GenConfig) -> (Database, TypeEnv) {
    let empty = TypeEnv::new();
    let mut g = Gen::new(rng, cfg, &empty);
    let int_ok = g.kinds.contains(&ScalarKind::Int);
    let mut env = TypeEnv::new();
    let mut db = Database::new();
    for i in 0..cfg.num_vars {
        // the first two variables are an int set and an int relation
        let ty = match i {
            0 if int_ok => EbType::Set(ScalarKind::Int),
            1 if int_ok => EbType::Rel(ScalarKind::Int, ScalarKind::Int),
            _ if g.rng.gen_bool(0.5) => EbType::Set(g.kind()),
            _ => EbType::Rel(g.kind(), g.kind()),
        };
        let (name, rel) = match ty {
            EbType::Set(k) => (
                format!("s{i}"),
                Relation::set_table(g.elements(k, cfg.max_set_size)),
            ),
            EbType::Rel(a, b) => (
                format!("r{i}"),
                Relation::pair_table(g.pairs(a, b, cfg.max_set_size)),
            ),
            _ => unreachable!(),
        };
        db = db.update(name.clone(), rel);
        env.insert(name, ty);
    }
    (db, env)
}

/// A random database and the types of its tables, determined by `cfg.seed`.
pub fn gen_database(cfg: &GenConfig) -> Result<(Database, TypeEnv), GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(gen_database_with(&mut rng, cfg))
}

/// A random expression of type `want` over `env`, determined by `cfg.seed`.
pub fn gen_expr(cfg: &GenConfig, env: &TypeEnv, want: EbType) -> Result<Expr, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(Gen::new(&mut rng, cfg, env).expr(want, cfg.max_depth))
}

/// Random simultaneous assignments to distinct variables of `env`.
pub fn gen_actions(cfg: &GenConfig, env: &TypeEnv) -> Result<ActionSet, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Gen::new(&mut rng, cfg, env).actions()
}

/// One generated formula case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprCase {
    pub db: Database,
    pub env: TypeEnv,
    pub formula: Formula,
}

/// One generated action-set case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionsCase {
    pub db: Database,
    pub env: TypeEnv,
    pub actions: ActionSet,
}

pub fn expr_case(cfg: &GenConfig, index: u64) -> Result<ExprCase, GenError> {
    cfg.validate()?;
    let mut rng = case_rng(cfg.seed, index);
    let (db, env) = gen_database_with(&mut rng, cfg);
    let formula = Gen::new(&mut rng, cfg, &env).formula();
    Ok(ExprCase { db, env, formula })
}

pub fn actions_case(cfg: &GenConfig, index: u64) -> Result<ActionsCase, GenError> {
    cfg.validate()?;
    let mut rng = case_rng(cfg.seed, index);
    let (db, env) = gen_database_with(&mut rng, cfg);
    let actions = Gen::new(&mut rng, cfg, &env).actions()?;
    Ok(ActionsCase { db, env, actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eb::{typecheck_actions, typecheck_expr, typecheck_formula};
    use crate::model::relation_as_set;

    #[test]
    fn database_is_deterministic_and_typed() {
        let cfg = GenConfig {
            seed: 1,
            num_vars: 2,
            ..GenConfig::default()
        };
        let (db, env) = gen_database(&cfg).unwrap();
        assert_eq!(gen_database(&cfg).unwrap(), (db.clone(), env.clone()));
        assert_eq!(env.len(), 2);
        for (name, rel) in db.iter() {
            match env[name] {
                EbType::Set(_) => assert!(rel.is_set_table()),
                EbType::Rel(..) => assert!(rel.is_pair_table()),
                _ => panic!("scalar table"),
            }
        }
    }

    #[test]
    fn size_and_universe_bounds() {
        let cfg = GenConfig {
            max_set_size: 0,
            num_vars: 6,
            ..GenConfig::default()
        };
        let (db, _) = gen_database(&cfg).unwrap();
        assert_eq!(db.total_rows(), 0);

        let cfg = GenConfig {
            universe: Universe {
                ints: 0..=0,
                bools: false,
            },
            num_vars: 6,
            ..GenConfig::default()
        };
        for seed in 0..20 {
            let (db, _) = gen_database(&GenConfig {
                seed,
                ..cfg.clone()
            })
            .unwrap();
            for (_, rel) in db.iter().filter(|(_, r)| r.is_set_table()) {
                assert!(relation_as_set(rel)
                    .unwrap()
                    .iter()
                    .all(|x| *x == Scalar::int(0)));
            }
        }
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn empty_universe_rejected() {
        let cfg = GenConfig {
            universe: Universe {
                ints: 1..=0,
                bools: false,
            },
            ..GenConfig::default()
        };
        assert_eq!(gen_database(&cfg), Err(GenError::EmptyUniverse));
    }

    #[test]
    fn leaves_at_depth_zero() {
        let cfg = GenConfig {
            max_depth: 0,
            ..GenConfig::default()
        };
        let (_, env) = gen_database(&cfg).unwrap();
        for seed in 0..50 {
            let e = gen_expr(
                &GenConfig {
                    seed,
                    ..cfg.clone()
                },
                &env,
                EbType::Set(ScalarKind::Int),
            )
            .unwrap();
            assert!(matches!(e, Expr::Var(_) | Expr::SetLit(_)), "{e}");
            assert_eq!(
                typecheck_expr(&e, &env).unwrap(),
                EbType::Set(ScalarKind::Int)
            );
        }
    }

    #[test]
    fn generated_formulas_typecheck() {
        let cfg = GenConfig::default();
        for i in 0..2000 {
            let case = expr_case(&cfg, i).unwrap();
            typecheck_formula(&case.formula, &case.env)
                .unwrap_or_else(|e| panic!("case {i}: {} : {e}", case.formula));
            assert!(case.formula.depth() <= cfg.max_depth, "{}", case.formula);
        }
    }

    #[test]
    fn generated_actions_typecheck_with_distinct_targets() {
        let cfg = GenConfig::default();
        for i in 0..2000 {
            let case = actions_case(&cfg, i).unwrap();
            typecheck_actions(&case.actions, &case.env)
                .unwrap_or_else(|e| panic!("case {i}: {} : {e}", case.actions));
            let targets: BTreeSet<_> = case
                .actions
                .assignments()
                .iter()
                .map(|a| &a.target)
                .collect();
            assert_eq!(targets.len(), case.actions.len());
            assert!((1..=3).contains(&case.actions.len()));
        }
    }

    #[test]
    fn actions_need_a_collection() {
        let cfg = GenConfig::default();
        assert!(matches!(
            gen_actions(&cfg, &TypeEnv::new()),
            Err(GenError::Unsatisfiable(_))
        ));
    }

    #[test]
    fn case_seeds_differ() {
        let seeds: BTreeSet<_> = (0..1000).map(|i| case_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
