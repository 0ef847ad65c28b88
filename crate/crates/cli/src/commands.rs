use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use pss_core::algo::{algo_wf, superpath, Terminal};
use pss_core::derivation::{derive_rel, search_wf};
use pss_core::harness::{check_instance, run_suite, InstanceResult, SuiteConfig, SUITES};
use pss_core::reduce::{normalize, NormalizeOutcome};
use pss_core::subtype::{check_rel, RelKind, RelOutcome};
use pss_core::{Budget, Decision, ExtContext, PssError, Term, Verdict};

use crate::syntax::{parse, Goal, ParseError, SourceFile};

pub const DEFAULT_FUEL: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(name = "pss", version, about = "Check subtyping and well-formedness in a pure subtype system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Elementary steps allowed before answering unknown.
    #[arg(long, global = true, default_value_t = DEFAULT_FUEL)]
    pub fuel: u64,
    /// Print one JSON object instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print step traces and derivations.
    #[arg(long, global = true)]
    pub trace: bool,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Enumeration bound for suites.
    #[arg(long, global = true)]
    pub max_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the goal stated in a file.
    Check { file: PathBuf },
    /// Is the term well-formed?
    Wf { file: PathBuf, term: String },
    /// Is LHS a subtype of RHS?
    Sub { file: PathBuf, lhs: String, rhs: String },
    /// Normal form of the term.
    Normalize { file: PathBuf, term: String },
    /// Minimal superpath of the term.
    Superpath { file: PathBuf, term: String },
    /// Run a property suite.
    Suite { name: String },
    /// Re-check a counterexample file written by a suite.
    Replay { file: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error("in argument `{text}`: {source}")]
    Arg { text: String, source: ParseError },
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("{0} has no goal")]
    NoGoal(String),
    #[error("{0} names no property")]
    NoProperty(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Core(#[from] PssError),
}

/// What a command printed and how it exits.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(e: CliError) -> Outcome {
        Outcome {
            code: 3,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

/// The JSON object printed under `--json`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub verdict: Verdict,
    pub fuel_used: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superpath: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
    /// Human-readable lines; not part of the JSON object.
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    fn new(command: &str, verdict: Verdict, budget: &Budget) -> Report {
        let reason = (verdict == Verdict::Unknown).then(|| budget.unknown_reason());
        Report {
            command: command.to_string(),
            verdict,
            fuel_used: budget.spent(),
            witness: None,
            superpath: None,
            counterexample: None,
            reason,
            report: None,
            text: Vec::new(),
        }
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Yes => 0,
        Verdict::No => 1,
        Verdict::Unknown => 2,
    }
}

fn load(path: &PathBuf) -> Result<SourceFile, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    parse(&text).map_err(|source| CliError::Parse { path: shown, source })
}

/// Parses a term argument; its free names must be definitions or declared
/// in the file's context.
fn arg_term(file: &SourceFile, text: &str) -> Result<Term, CliError> {
    let t = file.parse_term(text).map_err(|source| CliError::Arg {
        text: text.to_string(),
        source,
    })?;
    let ctx = file.context();
    if let Some(x) = t.free_vars().into_iter().find(|x| !ctx.in_dom(x)) {
        return Err(CliError::Unbound(x.to_string()));
    }
    Ok(t)
}

pub fn run(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok(r) => render(cli, r),
        Err(e) => Outcome::usage(e),
    }
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let mut budget = Budget::new(cli.fuel);
    match &cli.command {
        Command::Check { file } => {
            let f = load(file)?;
            let goal = f.goal.clone().ok_or_else(|| CliError::NoGoal(file.display().to_string()))?;
            let ctx = f.context();
            run_goal(&ctx, &goal, cli, &mut budget)
        }
        Command::Wf { file, term } => {
            let f = load(file)?;
            let t = arg_term(&f, term)?;
            run_goal(&f.context(), &Goal::Wf(t), cli, &mut budget)
        }
        Command::Sub { file, lhs, rhs } => {
            let f = load(file)?;
            let u = arg_term(&f, lhs)?;
            let t = arg_term(&f, rhs)?;
            run_goal(&f.context(), &Goal::Sub(u, t), cli, &mut budget)
        }
        Command::Normalize { file, term } => {
            let f = load(file)?;
            let t = arg_term(&f, term)?;
            run_goal(&f.context(), &Goal::Normalize(t), cli, &mut budget)
        }
        Command::Superpath { file, term } => {
            let f = load(file)?;
            let t = arg_term(&f, term)?;
            run_goal(&f.context(), &Goal::Superpath(t), cli, &mut budget)
        }
        Command::Suite { name } => suite(name, cli),
        Command::Replay { file } => {
            let f = load(file)?;
            let prop = f
                .property
                .clone()
                .ok_or_else(|| CliError::NoProperty(file.display().to_string()))?;
            let terms: Vec<Term> = f.definitions.iter().map(|(_, t)| t.clone()).collect();
            let res = check_instance(&prop, &f.context(), &terms, &mut budget)?;
            let (verdict, why) = match res {
                InstanceResult::Pass => (Verdict::Yes, None),
                InstanceResult::Fail(r) => (Verdict::No, Some(r)),
                InstanceResult::Skip(r) => (Verdict::Unknown, Some(r)),
            };
            let mut r = Report::new("replay", verdict, &budget);
            r.text.push(format!("{prop}: {}", pass_word(verdict)));
            if let Some(why) = why {
                r.text.push(why.clone());
                r.reason = Some(why);
            }
            if verdict == Verdict::No {
                r.counterexample = Some(f.to_string());
            }
            Ok(r)
        }
    }
}

fn pass_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Yes => "pass",
        Verdict::No => "fail",
        Verdict::Unknown => "skip",
    }
}

fn run_goal(ctx: &ExtContext, goal: &Goal, cli: &Cli, budget: &mut Budget) -> Result<Report, CliError> {
    match goal {
        Goal::Wf(t) | Goal::Check(t) => {
            let command = if matches!(goal, Goal::Wf(_)) { "wf" } else { "check" };
            let v = algo_wf(ctx, t, budget)?;
            let mut r = Report::new(command, v, budget);
            if v == Verdict::Yes && (cli.trace || cli.json) {
                // The derivation comes from the declarative search under its own budget.
                let mut b = Budget::new(cli.fuel);
                if let Decision::Yes(d) = search_wf(ctx, t, &mut b)? {
                    if cli.trace {
                        r.text.push(serde_json::to_string_pretty(&d.to_json()).unwrap());
                    }
                    r.witness = Some(d.to_json());
                }
            }
            Ok(r)
        }
        Goal::Sub(u, t) => {
            let out = check_rel(ctx, u, t, RelKind::Sub, budget)?;
            let mut r = Report::new("sub", out.verdict(), budget);
            if let RelOutcome::Yes(w) = &out {
                if cli.trace {
                    r.text.push(format!("meet: {}", w.witness));
                    r.text.push(format!("left:  {}", join(&w.left)));
                    r.text.push(format!("right: {}", join(&w.right)));
                }
                let mut wj = json!({
                    "meet": w.witness.to_string(),
                    "left": w.left.iter().map(Term::to_string).collect::<Vec<_>>(),
                    "right": w.right.iter().map(Term::to_string).collect::<Vec<_>>(),
                });
                if cli.trace {
                    if let Some(d) = derive_rel(ctx, RelKind::Sub, w) {
                        wj["derivation"] = d.to_json();
                    }
                }
                r.witness = Some(wj);
            }
            if let RelOutcome::Unknown { reason } = out {
                r.reason = Some(reason);
            }
            Ok(r)
        }
        Goal::Normalize(t) => match normalize(t, budget) {
            NormalizeOutcome::Normal { term, steps } => {
                let mut r = Report::new("normalize", Verdict::Yes, budget);
                r.text.push(term.to_string());
                r.witness = Some(json!({ "normal_form": term.to_string(), "steps": steps }));
                Ok(r)
            }
            NormalizeOutcome::Diverged { last } => {
                let mut r = Report::new("normalize", Verdict::Unknown, budget);
                r.witness = Some(json!({ "last": last.to_string() }));
                Ok(r)
            }
        },
        Goal::Superpath(t) => {
            let sp = superpath(ctx, t, budget)?;
            let v = match &sp.terminal {
                Terminal::ReachedTop | Terminal::Stopped => Verdict::Yes,
                Terminal::Stuck { .. } => Verdict::No,
                Terminal::Diverged { .. } => Verdict::Unknown,
            };
            let mut r = Report::new("superpath", v, budget);
            match &sp.terminal {
                Terminal::Stuck { reason } => r.reason = Some(reason.clone()),
                Terminal::Diverged { reason, .. } => r.reason = Some(reason.clone()),
                _ => {}
            }
            for (i, e) in sp.elems.iter().enumerate() {
                if cli.trace || i + 1 == sp.elems.len() || sp.elems.len() <= 20 {
                    r.text.push(format!("{i}: {e}"));
                }
            }
            r.superpath = Some(json!({
                "elems": sp.elems.iter().map(Term::to_string).collect::<Vec<_>>(),
                "terminal": sp.terminal,
            }));
            Ok(r)
        }
    }
}

fn join(ts: &[Term]) -> String {
    ts.iter().map(Term::to_string).collect::<Vec<_>>().join("  ->  ")
}

fn suite(name: &str, cli: &Cli) -> Result<Report, CliError> {
    if !SUITES.contains(&name) {
        return Err(CliError::UnknownSuite(name.to_string()));
    }
    let cfg = SuiteConfig {
        seed: cli.seed,
        max_size: cli.max_size,
        fuel: cli.fuel,
        ..SuiteConfig::default()
    };
    let rep = run_suite(name, &cfg)?;
    let v = Verdict::from_bool(rep.passed());
    let mut r = Report {
        fuel_used: rep.fuel_used,
        ..Report::new("suite", v, &Budget::new(0))
    };
    r.text.push(format!(
        "{}: {} instances, {} pass, {} fail, {} skip",
        rep.suite, rep.instances, rep.pass, rep.fail, rep.skip
    ));
    r.text.extend(rep.notes.iter().cloned());
    if let Some(c) = rep.counterexamples.first() {
        r.counterexample = Some(c.clone());
    }
    if v == Verdict::No && rep.fail == 0 {
        r.reason = rep.notes.last().cloned();
    }
    r.report = Some(serde_json::to_value(&rep).unwrap());
    Ok(r)
}

fn render(cli: &Cli, r: Report) -> Outcome {
    let code = exit_code(r.verdict);
    let mut stdout = String::new();
    if cli.json {
        stdout.push_str(&serde_json::to_string(&r).unwrap());
        stdout.push('\n');
    } else {
        match &r.reason {
            Some(reason) => {
                let _ = writeln!(stdout, "{}: {reason}", r.verdict);
            }
            None => {
                let _ = writeln!(stdout, "{}", r.verdict);
            }
        }
        for line in &r.text {
            let _ = writeln!(stdout, "{line}");
        }
        if let Some(c) = &r.counterexample {
            let _ = writeln!(stdout, "counterexample:\n{c}");
        }
    }
    Outcome {
        code,
        stdout,
        stderr: String::new(),
    }
}
