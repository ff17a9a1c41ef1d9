//! Differential checks of the translator against the reference evaluator,
//! and the fuzz driver built on them.

use std::fmt;
use std::str::FromStr;

use serde_json::json;

use super::gen::{actions_case, expr_case, GenConfig, GenError};
use super::par::{map_cases, Parallelism};
use super::shrink::{shrink, Case, Program};
use crate::eb::{ActionSet, Formula, TypeEnv};
use crate::eb_eval::{eval_actions, eval_formula};
use crate::model::{Database, EbValue, MachineState};
use crate::rep::{rep_db, rep_value};
use crate::sql::{eval_sql_expr_with_stats, EvalStats};
use crate::state::write_state;
use crate::translate::{
    eb2sql_actions, eb2sql_expr, eb2sql_res_with_stats, Rule, TranslateOptions,
};

/// A failing input with both sides' results rendered as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub program: String,
    pub database: String,
    pub eb_result: String,
    pub sql_result: String,
    pub shrunk: bool,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "program: {}", self.program)?;
        writeln!(f, "database:")?;
        for line in self.database.lines() {
            writeln!(f, "  {line}")?;
        }
        writeln!(f, "event-b: {}", self.eb_result)?;
        write!(f, "sql:     {}", self.sql_result)
    }
}

fn render<T: fmt::Display, E: fmt::Display>(r: &Result<T, E>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

fn compare<T: PartialEq + fmt::Display>(
    program: String,
    db: &Database,
    env: &TypeEnv,
    eb: Result<T, String>,
    sql: Result<T, String>,
) -> Result<(), Counterexample> {
    match (&eb, &sql) {
        (Ok(a), Ok(b)) if a == b => Ok(()),
        _ => Err(Counterexample {
            program,
            database: write_state(db, env),
            eb_result: render(&eb),
            sql_result: render(&sql),
            shrunk: false,
        }),
    }
}

/// Compares the translated query's value with the formula's value in the
/// corresponding machine state. Errors on either side count as failures.
pub fn check_theorem1(
    f: &Formula,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<(), Counterexample> {
    check_theorem1_with_stats(f, env, db, opts, &mut EvalStats::default())
}

pub fn check_theorem1_with_stats(
    f: &Formula,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<(), Counterexample> {
    let eb: Result<EbValue, String> = rep_db(db)
        .map_err(|e| e.to_string())
        .and_then(|m| eval_formula(f, &m).map_err(|e| e.to_string()));
    let sql = eb2sql_expr(f, env, opts)
        .map_err(|e| e.to_string())
        .and_then(|q| eval_sql_expr_with_stats(&q, db, stats).map_err(|e| e.to_string()))
        .and_then(|v| rep_value(&v).map_err(|e| e.to_string()));
    compare(f.to_string(), db, env, eb, sql)
}

/// Compares the state reached by the translated statements with the state
/// reached by the simultaneous assignments.
pub fn check_theorem2(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<(), Counterexample> {
    check_theorem2_with_stats(actions, env, db, opts, &mut EvalStats::default())
}

pub fn check_theorem2_with_stats(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<(), Counterexample> {
    let eb: Result<MachineState, String> = rep_db(db)
        .map_err(|e| e.to_string())
        .and_then(|m| eval_actions(actions, &m).map_err(|e| e.to_string()));
    let sql = eb2sql_res_with_stats(actions, env, db, opts, stats)
        .map_err(|e| e.to_string())
        .and_then(|out| rep_db(&out).map_err(|e| e.to_string()));
    compare(actions.to_string(), db, env, eb, sql)
}

/// Every ordering of the assignments must reach the same database.
pub fn check_permutations(
    actions: &ActionSet,
    env: &TypeEnv,
    db: &Database,
    opts: TranslateOptions,
) -> Result<(), Counterexample> {
    let reference = eb2sql_res_with_stats(actions, env, db, opts, &mut EvalStats::default())
        .map_err(|e| e.to_string());
    let mut order: Vec<_> = actions.assignments().to_vec();
    let n = order.len();
    // Heap's algorithm, iterative
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            let permuted = ActionSet::new(order.clone()).expect("same targets");
            let out = eb2sql_res_with_stats(&permuted, env, db, opts, &mut EvalStats::default())
                .map_err(|e| e.to_string());
            if out != reference {
                return Err(Counterexample {
                    program: permuted.to_string(),
                    database: write_state(db, env),
                    eb_result: format!("as written ({actions}): {}", render_db(&reference, env)),
                    sql_result: render_db(&out, env),
                    shrunk: false,
                });
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(())
}

fn render_db(r: &Result<Database, String>, env: &TypeEnv) -> String {
    match r {
        Ok(db) => write_state(db, env).trim_end().replace('\n', "; "),
        Err(e) => format!("error: {e}"),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FuzzMode {
    #[default]
    Expr,
    Actions,
}

impl FuzzMode {
    pub fn name(self) -> &'static str {
        match self {
            FuzzMode::Expr => "expr",
            FuzzMode::Actions => "actions",
        }
    }
}

impl FromStr for FuzzMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expr" => Ok(FuzzMode::Expr),
            "actions" => Ok(FuzzMode::Actions),
            other => Err(format!("unknown mode `{other}` (expected expr or actions)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzConfig {
    pub gen: GenConfig,
    pub cases: u64,
    pub mode: FuzzMode,
    pub opts: TranslateOptions,
    /// How many failures (lowest case indices first) to shrink.
    pub shrink_limit: usize,
    pub parallelism: Parallelism,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            gen: GenConfig::default(),
            cases: 1000,
            mode: FuzzMode::Expr,
            opts: TranslateOptions::default(),
            shrink_limit: 8,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseResult {
    pub index: u64,
    pub program: String,
    /// Assignment rules used, in assignment order; empty in expression mode.
    pub rules: Vec<Rule>,
    pub failure: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub seed: u64,
    pub mode: FuzzMode,
    pub cases: Vec<CaseResult>,
    pub stats: EvalStats,
}

impl CheckReport {
    pub fn cases_run(&self) -> usize {
        self.cases.len()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| c.failure.is_some())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn first_failure(&self) -> Option<u64> {
        self.failures().next().map(|c| c.index)
    }

    /// One JSON object per case, then a summary object.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.cases {
            let mut line = json!({
                "seed": self.seed,
                "case": c.index,
                "verdict": if c.failure.is_some() { "fail" } else { "pass" },
                "program": c.program,
            });
            if let Some(ce) = &c.failure {
                line["counterexample"] = json!({
                    "program": ce.program,
                    "database": ce.database,
                    "eb_result": ce.eb_result,
                    "sql_result": ce.sql_result,
                    "shrunk": ce.shrunk,
                });
            }
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let summary = json!({
            "summary": {
                "seed": self.seed,
                "mode": self.mode.name(),
                "cases": self.cases_run(),
                "failures": self.failures().count(),
                "first_failure": self.first_failure(),
            }
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

fn generate(cfg: &FuzzConfig, index: u64) -> Result<Case, GenError> {
    Ok(match cfg.mode {
        FuzzMode::Expr => {
            let c = expr_case(&cfg.gen, index)?;
            Case {
                program: Program::Formula(c.formula),
                db: c.db,
                env: c.env,
            }
        }
        FuzzMode::Actions => {
            let c = actions_case(&cfg.gen, index)?;
            Case {
                program: Program::Actions(c.actions),
                db: c.db,
                env: c.env,
            }
        }
    })
}

/// Runs the differential check matching the case's program kind.
pub fn check_case(
    case: &Case,
    opts: TranslateOptions,
    stats: &mut EvalStats,
) -> Result<(), Counterexample> {
    match &case.program {
        Program::Formula(f) => check_theorem1_with_stats(f, &case.env, &case.db, opts, stats),
        Program::Actions(a) => check_theorem2_with_stats(a, &case.env, &case.db, opts, stats),
    }
}

fn run_case(cfg: &FuzzConfig, index: u64) -> Result<(CaseResult, EvalStats), GenError> {
    let case = generate(cfg, index)?;
    let mut stats = EvalStats::default();
    let failure = check_case(&case, cfg.opts, &mut stats).err();
    let rules = match &case.program {
        Program::Actions(a) => eb2sql_actions(a, &case.env, cfg.opts)
            .map(|ts| ts.iter().map(|t| t.rule).collect())
            .unwrap_or_default(),
        Program::Formula(_) => Vec::new(),
    };
    Ok((
        CaseResult {
            index,
            program: case.program.to_string(),
            rules,
            failure,
        },
        stats,
    ))
}

/// Generates and checks `cfg.cases` cases. Results are ordered by case
/// index whatever the parallelism, so reports are reproducible.
pub fn fuzz(cfg: &FuzzConfig) -> Result<CheckReport, GenError> {
    cfg.gen.validate()?;
    let results = map_cases(cfg.cases, cfg.parallelism, |i| run_case(cfg, i));
    let mut cases = Vec::with_capacity(results.len());
    let mut stats = EvalStats::default();
    for r in results {
        let (case, s) = r?;
        stats.merge(&s);
        cases.push(case);
    }
    let mut shrunk = 0;
    for c in cases.iter_mut() {
        if shrunk >= cfg.shrink_limit {
            break;
        }
        if c.failure.is_none() {
            continue;
        }
        shrunk += 1;
        let input = generate(cfg, c.index)?;
        let opts = cfg.opts;
        let small = shrink(&input, |k| {
            check_case(k, opts, &mut EvalStats::default()).is_err()
        })
        .expect("the case failed when first checked");
        if small != input {
            let mut ce = check_case(&small, opts, &mut EvalStats::default())
                .expect_err("shrinking keeps the failure");
            ce.shrunk = true;
            c.failure = Some(ce);
        }
    }
    Ok(CheckReport {
        seed: cfg.gen.seed,
        mode: cfg.mode,
        cases,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eb::{parse_actions, parse_expr, EbType};
    use crate::model::{Relation, Scalar, ScalarKind};
    use crate::translate::Mutation;

    fn env() -> TypeEnv {
        [
            ("s", EbType::Set(ScalarKind::Int)),
            ("t", EbType::Set(ScalarKind::Int)),
        ]
        .into_iter()
        .map(|(n, t)| (n.to_string(), t))
        .collect()
    }

    fn db(s: &[i64], t: &[i64]) -> Database {
        [
            (
                "s".to_string(),
                Relation::set_table(s.iter().map(|&x| Scalar::int(x))),
            ),
            (
                "t".to_string(),
                Relation::set_table(t.iter().map(|&x| Scalar::int(x))),
            ),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn union_passes() {
        let f = parse_expr("s \\/ t").unwrap();
        assert!(check_theorem1(&f, &env(), &db(&[1], &[2]), TranslateOptions::default()).is_ok());
    }

    #[test]
    fn card_of_empty_passes() {
        let f = parse_expr("card(s)").unwrap();
        assert!(check_theorem1(&f, &env(), &db(&[], &[]), TranslateOptions::default()).is_ok());
    }

    #[test]
    fn intersect_mutation_is_caught() {
        let f = parse_expr("s /\\ t").unwrap();
        let opts = TranslateOptions {
            force_general: false,
            mutation: Some(Mutation::IntersectAsDifference),
        };
        let ce = check_theorem1(&f, &env(), &db(&[1, 2], &[2]), opts).unwrap_err();
        assert_eq!(ce.eb_result, "{2}");
        assert_eq!(ce.sql_result, "{1}");
    }

    #[test]
    fn empty_and_swap_action_sets_pass() {
        let opts = TranslateOptions::default();
        assert!(check_theorem2(&ActionSet::empty(), &env(), &db(&[1], &[2]), opts).is_ok());
        let swap = parse_actions("s := t || t := s").unwrap();
        assert!(check_theorem2(&swap, &env(), &db(&[1], &[2]), opts).is_ok());
        assert!(check_permutations(&swap, &env(), &db(&[1], &[2]), opts).is_ok());
    }

    #[test]
    fn report_is_deterministic_across_parallelism() {
        let mut cfg = FuzzConfig {
            cases: 60,
            parallelism: Parallelism::Sequential,
            ..FuzzConfig::default()
        };
        let a = fuzz(&cfg).unwrap();
        cfg.parallelism = Parallelism::Parallel;
        let b = fuzz(&cfg).unwrap();
        assert_eq!(a.to_json_lines(), b.to_json_lines());
        assert!(a.passed());
        assert_eq!(a.to_json_lines().lines().count(), 61);
    }

    #[test]
    fn mode_names() {
        assert_eq!("actions".parse::<FuzzMode>(), Ok(FuzzMode::Actions));
        assert!("both".parse::<FuzzMode>().is_err());
    }
}
