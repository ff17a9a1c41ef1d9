//! Differential testing of the translator: case generation, checking,
//! shrinking and the fuzz driver.

pub mod check;
pub mod gen;
pub mod identities;
pub mod par;
pub mod shrink;

pub use check::{
    check_case, check_permutations, check_theorem1, check_theorem1_with_stats, check_theorem2,
    check_theorem2_with_stats, fuzz, CaseResult, CheckReport, Counterexample, FuzzConfig, FuzzMode,
};
pub use gen::{
    actions_case, case_seed, expr_case, gen_actions, gen_database, gen_expr, ActionsCase, ExprCase,
    GenConfig, GenError, Universe,
};
pub use identities::{check_identities, IdentityResult, IDENTITIES};
pub use par::{map_cases, Parallelism};
pub use shrink::{shrink, Case, NotFailing, Program};
