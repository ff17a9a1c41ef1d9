//! The `ebsql` command line.
//!
//! Exit status: 0 on success or a passing check, 1 when a check or fuzz run
//! finds a counterexample, 2 on usage, input, parse or type errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ebsql_core::eb::{parse_actions, parse_expr, ActionSet, Formula, TypeEnv};
use ebsql_core::eb_eval::eval_formula;
use ebsql_core::harness::{
    check_case, fuzz, shrink, Case, FuzzConfig, FuzzMode, GenConfig, Parallelism, Program,
};
use ebsql_core::rep::{rep_db, rep_value};
use ebsql_core::sql::{emit_statements, eval_sql_expr, Dialect, EvalStats, SqlExpr};
use ebsql_core::state::{read_state, write_state, State};
use ebsql_core::translate::{eb2sql_actions, eb2sql_expr, eb2sql_res, Mutation, TranslateOptions};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "ebsql",
    version,
    about = "Translate Event-B actions to SQL and check the translation"
)]
pub struct Cli {
    /// SQL dialect for emitted text.
    #[arg(long, global = true, default_value = "mysql")]
    pub dialect: Dialect,
    /// Seed for fuzzing.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TranslateFlags {
    /// Use the general delete-then-insert rule for every assignment.
    #[arg(long)]
    pub force_general: bool,
    /// Enable a deliberate translation fault.
    #[arg(long)]
    pub mutation: Option<Mutation>,
}

impl TranslateFlags {
    fn options(self) -> TranslateOptions {
        TranslateOptions {
            force_general: self.force_general,
            mutation: self.mutation,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the SQL for an expression, predicate or action set.
    Translate {
        #[arg(long, conflicts_with = "actions", required_unless_present = "actions")]
        expr: Option<String>,
        /// File holding `v1 := E1 || v2 := E2 ...`.
        #[arg(long)]
        actions: Option<PathBuf>,
        /// State file declaring the variables (values are ignored).
        #[arg(long)]
        env: PathBuf,
        #[command(flatten)]
        flags: TranslateFlags,
    },
    /// Evaluate a formula with the Event-B interpreter.
    EvalEb {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        expr: String,
    },
    /// Translate a formula and evaluate the SQL against the state.
    EvalSql {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        expr: String,
        #[command(flatten)]
        flags: TranslateFlags,
    },
    /// Run the translated statements and print the resulting state.
    Exec {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        actions: PathBuf,
        #[command(flatten)]
        flags: TranslateFlags,
    },
    /// Compare both interpreters on one input.
    Check {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
        actions: Option<PathBuf>,
        #[arg(long)]
        expr: Option<String>,
        #[command(flatten)]
        flags: TranslateFlags,
    },
    /// Compare both interpreters on generated inputs; prints a JSON-lines report.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        #[arg(long, default_value_t = 5)]
        max_depth: usize,
        #[arg(long, default_value_t = 4)]
        num_vars: usize,
        #[arg(long, default_value = "expr")]
        mode: FuzzMode,
        /// Failures to shrink, lowest case index first.
        #[arg(long, default_value_t = 8)]
        shrink: usize,
        /// Run cases on one thread.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        flags: TranslateFlags,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    State { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    /// Set when a check found a counterexample.
    pub failed: bool,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome {
            output,
            failed: false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed)
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_state(path: &Path) -> Result<State, CliError> {
    read_state(&read_file(path)?).map_err(|e| CliError::State {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `error` followed by the input line and a caret under byte `at`.
fn located(error: impl std::fmt::Display, text: &str, at: usize) -> CliError {
    let at = at.min(text.len());
    let line_start = text[..at].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[at..].find('\n').map_or(text.len(), |i| at + i);
    let column = text[line_start..at].chars().count();
    CliError::Input(format!(
        "{error}\n  {}\n  {}^",
        &text[line_start..line_end],
        " ".repeat(column)
    ))
}

fn formula(text: &str) -> Result<Formula, CliError> {
    parse_expr(text).map_err(|e| located(&e, text, e.position))
}

fn actions(path: &Path) -> Result<ActionSet, CliError> {
    let text = read_file(path)?;
    parse_actions(&text).map_err(|e| match e {
        ebsql_core::eb::ActionsError::Parse(p) => located(&p, &text, p.position),
        other => CliError::Input(format!("{}: {other}", path.display())),
    })
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn render_sql(e: &SqlExpr) -> String {
    format!("{e}\n")
}

fn translate_text(
    f: Option<&str>,
    acts: Option<&Path>,
    env: &TypeEnv,
    opts: TranslateOptions,
    d: Dialect,
) -> Result<String, CliError> {
    if let Some(text) = f {
        let f = formula(text)?;
        let q = eb2sql_expr(&f, env, opts).map_err(input_err)?;
        return Ok(render_sql(&q));
    }
    let path = acts.expect("clap requires --expr or --actions");
    let a = actions(path)?;
    let ts = eb2sql_actions(&a, env, opts).map_err(input_err)?;
    let mut out = String::new();
    for t in ts {
        out.push_str(&format!(
            "-- rule {}: {} := {}\n",
            t.rule.number(),
            t.primed_table,
            t.primed_def
        ));
        out.push_str(&emit_statements(&t.statements, d));
        out.push('\n');
    }
    Ok(out)
}

fn check_one(case: Case, opts: TranslateOptions) -> Outcome {
    let fails = |c: &Case| check_case(c, opts, &mut EvalStats::default()).is_err();
    match shrink(&case, fails) {
        Err(_) => Outcome::ok(format!("pass: {}\n", case.program)),
        Ok(small) => {
            let mut ce = check_case(&small, opts, &mut EvalStats::default())
                .expect_err("shrinking keeps the failure");
            ce.shrunk = small != case;
            Outcome {
                output: format!(
                    "counterexample{}:\n{ce}\n",
                    if ce.shrunk { " (shrunk)" } else { "" }
                ),
                failed: true,
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Translate {
            expr,
            actions,
            env,
            flags,
        } => {
            let st = load_state(env)?;
            translate_text(
                expr.as_deref(),
                actions.as_deref(),
                &st.env,
                flags.options(),
                cli.dialect,
            )
            .map(Outcome::ok)
        }
        Command::EvalEb { state, expr } => {
            let st = load_state(state)?;
            let f = formula(expr)?;
            ebsql_core::eb::typecheck_formula(&f, &st.env).map_err(input_err)?;
            let m = rep_db(&st.db).map_err(input_err)?;
            let v = eval_formula(&f, &m).map_err(input_err)?;
            Ok(Outcome::ok(format!("{v}\n")))
        }
        Command::EvalSql { state, expr, flags } => {
            let st = load_state(state)?;
            let f = formula(expr)?;
            let q = eb2sql_expr(&f, &st.env, flags.options()).map_err(input_err)?;
            let v = eval_sql_expr(&q, &st.db).map_err(input_err)?;
            let v = rep_value(&v).map_err(input_err)?;
            Ok(Outcome::ok(format!("{v}\n")))
        }
        Command::Exec {
            db,
            actions: path,
            flags,
        } => {
            let st = load_state(db)?;
            let a = actions(path)?;
            let next = eb2sql_res(&a, &st.env, &st.db, flags.options()).map_err(input_err)?;
            Ok(Outcome::ok(write_state(&next, &st.env)))
        }
        Command::Check {
            db,
            actions: path,
            expr,
            flags,
        } => {
            let st = load_state(db)?;
            let program = match (expr, path) {
                (Some(text), _) => {
                    let f = formula(text)?;
                    ebsql_core::eb::typecheck_formula(&f, &st.env).map_err(input_err)?;
                    Program::Formula(f)
                }
                (None, Some(p)) => {
                    let a = actions(p)?;
                    ebsql_core::eb::typecheck_actions(&a, &st.env).map_err(input_err)?;
                    Program::Actions(a)
                }
                (None, None) => unreachable!("clap requires --expr or --actions"),
            };
            Ok(check_one(
                Case {
                    program,
                    db: st.db,
                    env: st.env,
                },
                flags.options(),
            ))
        }
        Command::Fuzz {
            cases,
            max_depth,
            num_vars,
            mode,
            shrink,
            sequential,
            flags,
        } => {
            let cfg = FuzzConfig {
                gen: GenConfig {
                    seed: cli.seed,
                    max_depth: *max_depth,
                    num_vars: *num_vars,
                    ..GenConfig::default()
                },
                cases: *cases,
                mode: *mode,
                opts: flags.options(),
                shrink_limit: *shrink,
                parallelism: if *sequential {
                    Parallelism::Sequential
                } else {
                    Parallelism::default()
                },
            };
            let report = fuzz(&cfg).map_err(input_err)?;
            Ok(Outcome {
                output: report.to_json_lines(),
                failed: !report.passed(),
            })
        }
    }
}

/// Runs `cli`, writes output to `--out` or `stdout`, reports errors on
/// `stderr`, and returns the exit status.
pub fn main_with(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = run(cli).and_then(|o| {
        match &cli.out {
            Some(path) => fs::write(path, &o.output).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?,
            None => stdout
                .write_all(o.output.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?,
        }
        Ok(o)
    });
    match result {
        Ok(o) => o.exit_code(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caret_points_at_offset() {
        let e = located("bad", "s \\/\nt +", 8);
        assert_eq!(e.to_string(), "bad\n  t +\n     ^");
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "ebsql",
            "--dialect",
            "sqlite",
            "fuzz",
            "--mode",
            "actions",
            "--mutation",
            "drop-distinct-dom",
        ])
        .unwrap();
        assert_eq!(cli.dialect, Dialect::Sqlite);
        match cli.command {
            Command::Fuzz { mode, flags, .. } => {
                assert_eq!(mode, FuzzMode::Actions);
                assert_eq!(flags.mutation, Some(Mutation::DropDistinctDom));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn translate_needs_one_input() {
        assert!(Cli::try_parse_from(["ebsql", "translate", "--env", "x"]).is_err());
        assert!(Cli::try_parse_from([
            "ebsql",
            "translate",
            "--env",
            "x",
            "--expr",
            "s",
            "--actions",
            "a"
        ])
        .is_err());
    }
}
