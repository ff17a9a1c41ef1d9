//! Exhaustive checks of the set identities behind the optimized assignment
//! rules, over a three-element carrier.

use crate::eb::{parse_expr, Formula};
use crate::eb_eval::eval_formula;
use crate::model::{EbValue, MachineState, Scalar};

use super::par::{map_cases, Parallelism};

/// Each entry is `(lhs, rhs)`; both sides are read with `r` a relation and
/// `s`, `t` sets.
pub const IDENTITIES: [(&str, &str); 5] = [
    ("r \\ (s <| r)", "s <<| r"),
    ("r \\ (s <<| r)", "s <| r"),
    ("r |> (ran(r) \\ s)", "r |>> s"),
    ("r \\ (r |>> s)", "r |> s"),
    ("s \\ (s /\\ t)", "s \\ t"),
];

pub const CARRIER: [i64; 3] = [0, 1, 2];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityResult {
    pub lhs: &'static str,
    pub rhs: &'static str,
    pub combinations: usize,
    /// Assignments `(r, s, t)` where the sides differ or either side fails.
    pub counterexamples: Vec<String>,
}

impl IdentityResult {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn subset<T: Clone + Ord>(items: &[T], mask: usize) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, x)| x.clone())
        .collect()
}

/// All 512 relations over the carrier paired with all 8 subsets `s`.
/// Identities that mention `t` range over all 8 values of `t` as well.
pub fn check_identities(par: Parallelism) -> Vec<IdentityResult> {
    let elems: Vec<Scalar> = CARRIER.iter().map(|&x| Scalar::int(x)).collect();
    let pairs: Vec<(Scalar, Scalar)> = elems
        .iter()
        .flat_map(|a| elems.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let sets = 1usize << elems.len();
    let rels = 1usize << pairs.len();
    IDENTITIES
        .iter()
        .map(|&(lhs, rhs)| {
            let l = parse_expr(lhs).expect("identity parses");
            let r = parse_expr(rhs).expect("identity parses");
            let uses_t = lhs.contains('t') || rhs.contains('t');
            let ts = if uses_t { sets } else { 1 };
            let n = rels * sets * ts;
            let found = map_cases(n as u64, par, |i| {
                let i = i as usize;
                let (rm, sm, tm) = (i / (sets * ts), i / ts % sets, i % ts);
                let m = MachineState::new()
                    .bind("r", EbValue::rel_of(subset(&pairs, rm)))
                    .bind("s", EbValue::set_of(subset(&elems, sm)))
                    .bind("t", EbValue::set_of(subset(&elems, tm)));
                let a = eval_formula(&l, &m);
                let b = eval_formula(&r, &m);
                match (a, b) {
                    (Ok(a), Ok(b)) if a == b => None,
                    (a, b) => Some(format!("{m}: {a:?} vs {b:?}")),
                }
            });
            IdentityResult {
                lhs,
                rhs,
                combinations: n,
                counterexamples: found.into_iter().flatten().collect(),
            }
        })
        .collect()
}

/// Evaluates both sides of `lhs = rhs` in one state.
pub fn sides_agree(lhs: &Formula, rhs: &Formula, m: &MachineState) -> bool {
    matches!((eval_formula(lhs, m), eval_formula(rhs, m)), (Ok(a), Ok(b)) if a == b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        let results = check_identities(Parallelism::default());
        assert_eq!(results.len(), 5);
        for r in &results {
            assert!(
                r.holds(),
                "{} = {}: {:?}",
                r.lhs,
                r.rhs,
                r.counterexamples.first()
            );
        }
        assert_eq!(results[0].combinations, 4096);
        assert_eq!(results[4].combinations, 4096 * 8);
    }

    #[test]
    fn a_false_identity_is_refuted() {
        let l = parse_expr("r \\ (s <| r)").unwrap();
        let r = parse_expr("s <| r").unwrap();
        let m = MachineState::new()
            .bind("r", EbValue::rel_of([(Scalar::int(0), Scalar::int(1))]))
            .bind("s", EbValue::set_of([]));
        assert!(!sides_agree(&l, &r, &m));
    }
}
