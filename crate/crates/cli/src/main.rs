//! Command-line surface: behavioural/logical distance computations, formula
//! evaluation, derivation checking, system validation, and one-command
//! reproduction scenarios.
//!
//! Exit codes: 0 success, 1 validation or verdict failure, 2 parse error,
//! 3 internal error.

use behdist_core::graded::{behavioural_distance, GradedError, Semantics};
use behdist_core::lifting::SolverError;
use behdist_core::logic::{
    evaluate, logical_distance, parse_formula, witness_search, EnumConfig, LogicError,
};
use behdist_core::metric::{FinMetric, LabelSpace, MetricKind, TensorKind};
use behdist_core::quanteq::{build_trace_theory, check_derivation, parse_proof, BaseTheory, GradedTheory};
use behdist_core::system::{load_system, validate_system, Coalgebra, SystemError};
use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

mod repro;

#[derive(Parser)]
#[command(
    name = "behdist",
    version,
    about = "Behavioural distances, quantitative modal logics and graded equational proof checking on finite quantitative transition systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Depth bound for distances and formula enumeration.
    #[arg(long, global = true, default_value_t = 4)]
    depth: usize,
    /// Constant grid step for propositional operators and value grids.
    #[arg(long, global = true, default_value_t = 0.05)]
    grid: f64,
    /// Comparison tolerance used in reports.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Emit machine-readable JSON on standard output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Per-depth behavioural distances between two states
    Dist {
        system: PathBuf,
        #[arg(long)]
        sem: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Bounded logical distance with the witnessing formula
    Logic {
        system: PathBuf,
        #[arg(long)]
        sem: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Include whitelisted propositional operators (modal-only otherwise).
        #[arg(long)]
        props: bool,
        #[arg(long, default_value_t = 7)]
        size_cap: usize,
    },
    /// Evaluate a formula on every state
    Eval {
        system: PathBuf,
        #[arg(long)]
        sem: String,
        #[arg(long)]
        formula: String,
    },
    /// First enumerated formula separating two states by at least the target
    Witness {
        system: PathBuf,
        #[arg(long)]
        sem: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        target: f64,
        #[arg(long)]
        props: bool,
        #[arg(long, default_value_t = 7)]
        size_cap: usize,
    },
    /// Check a derivation proof file against a built-in theory
    Check {
        proof: PathBuf,
        /// One of: metric, fuzzy, prob.
        #[arg(long)]
        theory: String,
        /// Comma-separated label names.
        #[arg(long)]
        labels: String,
        /// `discrete` or semicolon-separated matrix rows, e.g. `0,0.3;0.3,0`.
        #[arg(long, default_value = "discrete")]
        metric: String,
    },
    /// Run a named reproduction scenario
    Repro {
        /// One of: stream, fig1_metric, fig1_discrete, kantorovich_sup,
        /// coupling_bound.
        scenario: String,
        /// Label distance v for fig1_metric and coupling_bound.
        #[arg(short = 'v', long, default_value_t = 0.5)]
        v: f64,
    },
    /// Validate a system file
    Validate { system: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Parse(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Parse(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Io { .. } | SystemError::Parse(_) => CliError::Parse(e.to_string()),
            SystemError::Validation(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<GradedError> for CliError {
    fn from(e: GradedError) -> Self {
        match e {
            GradedError::Solver(_) => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        match e {
            LogicError::Syntax { .. } | LogicError::Constant(_) | LogicError::Depth(_) => {
                CliError::Parse(e.to_string())
            }
            LogicError::Graded(g) => g.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_sem(s: &str) -> Result<Semantics, CliError> {
    Semantics::parse(s).ok_or_else(|| {
        CliError::Parse(format!(
            "unknown semantics `{s}` (expected metric_trace, fuzzy_trace, prob_trace or stream)"
        ))
    })
}

fn state_of(c: &Coalgebra, id: &str) -> Result<usize, CliError> {
    c.state_index(id)
        .ok_or_else(|| CliError::Validation(format!("state `{id}` not declared by the system")))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Dist { system, sem, from, to } => {
            let c = load_system(system)?;
            let sem = parse_sem(sem)?;
            let (x, y) = (state_of(&c, from)?, state_of(&c, to)?);
            let d = behavioural_distance(&c, sem, x, y, cli.depth)?;
            if cli.json {
                let out = json!({
                    "command": "dist",
                    "sem": sem.as_str(),
                    "from": from,
                    "to": to,
                    "depth": cli.depth,
                    "per_depth": d.per_depth,
                    "max": d.max,
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!("behavioural distance ({}) between `{from}` and `{to}`:", sem.as_str());
                println!("{:>6}  distance", "depth");
                for (n, v) in d.per_depth.iter().enumerate() {
                    println!("{n:>6}  {v}");
                }
                println!("{:>6}  {}", "max", d.max);
            }
            Ok(0)
        }
        Command::Logic { system, sem, from, to, props, size_cap } => {
            let c = load_system(system)?;
            let sem = parse_sem(sem)?;
            let (x, y) = (state_of(&c, from)?, state_of(&c, to)?);
            let cfg = EnumConfig {
                props: *props,
                grid: cli.grid,
                size_cap: *size_cap,
                ..EnumConfig::default()
            };
            let (logical, witness) = logical_distance(&c, sem, x, y, cli.depth, &cfg)?;
            let behavioural = behavioural_distance(&c, sem, x, y, cli.depth)?.max;
            let strict = logical < behavioural - cli.tol;
            let witness_str = witness.map(|f| f.to_string());
            if cli.json {
                let out = json!({
                    "command": "logic",
                    "sem": sem.as_str(),
                    "from": from,
                    "to": to,
                    "depth": cli.depth,
                    "logical": logical,
                    "behavioural": behavioural,
                    "witness": witness_str,
                    "gap_strict": strict,
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!(
                    "logical distance ({}) between `{from}` and `{to}`: {logical}",
                    sem.as_str()
                );
                if let Some(w) = &witness_str {
                    println!("witness: {w}");
                }
                println!("behavioural distance (same depth bound): {behavioural}");
                if strict {
                    println!("GAP: logical distance is strictly below behavioural distance");
                }
            }
            Ok(0)
        }
        Command::Eval { system, sem, formula } => {
            let c = load_system(system)?;
            let sem = parse_sem(sem)?;
            let f = parse_formula(formula)?;
            let vals = evaluate(&f, &c, sem)?;
            if cli.json {
                let map: serde_json::Map<String, serde_json::Value> = c
                    .states
                    .points()
                    .iter()
                    .zip(&vals)
                    .map(|(s, v)| (s.clone(), json!(v)))
                    .collect();
                let out = json!({
                    "command": "eval",
                    "sem": sem.as_str(),
                    "formula": f.to_string(),
                    "values": map,
                });
                println!("{}", serde_json::to_string_pretty(&out).unwrap());
            } else {
                println!("evaluation of `{f}` ({}):", sem.as_str());
                for (s, v) in c.states.points().iter().zip(&vals) {
                    println!("{s:>8}  {v}");
                }
            }
            Ok(0)
        }
        Command::Witness { system, sem, from, to, target, props, size_cap } => {
            if !(0.0..=1.0).contains(target) {
                return Err(CliError::Parse(format!("target {target} out of range [0,1]")));
            }
            let c = load_system(system)?;
            let sem = parse_sem(sem)?;
            let (x, y) = (state_of(&c, from)?, state_of(&c, to)?);
            let cfg = EnumConfig {
                props: *props,
                grid: cli.grid,
                size_cap: *size_cap,
                ..EnumConfig::default()
            };
            match witness_search(&c, sem, x, y, cli.depth, *target, &cfg)? {
                Ok((f, gap)) => {
                    if cli.json {
                        let out = json!({
                            "command": "witness",
                            "found": true,
                            "formula": f.to_string(),
                            "gap": gap,
                            "target": target,
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!("witness: {f} (gap {gap}, target {target})");
                    }
                    Ok(0)
                }
                Err(nf) => {
                    if cli.json {
                        let out = json!({
                            "command": "witness",
                            "found": false,
                            "best_gap": nf.best_gap,
                            "best": nf.best.map(|f| f.to_string()),
                            "target": target,
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!(
                            "no witness reaches {target}; best gap {} via {}",
                            nf.best_gap,
                            nf.best.map(|f| f.to_string()).unwrap_or_else(|| "-".into())
                        );
                    }
                    Ok(1)
                }
            }
        }
        Command::Check { proof, theory, labels, metric } => {
            let theory = build_theory(theory, labels, metric)?;
            let text = std::fs::read_to_string(proof)
                .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", proof.display())))?;
            let tree = parse_proof(&text, &theory).map_err(|e| CliError::Parse(e.to_string()))?;
            match check_derivation(&theory, &tree) {
                Ok(()) => {
                    if cli.json {
                        let out = json!({"command": "check", "ok": true});
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!(
                            "proof ok: {} ={} {}",
                            tree.conclusion.lhs, tree.conclusion.eps, tree.conclusion.rhs
                        );
                    }
                    Ok(0)
                }
                Err(e) => {
                    if cli.json {
                        let out = json!({"command": "check", "ok": false, "error": e.to_string()});
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!("invalid proof: {e}");
                    }
                    Ok(1)
                }
            }
        }
        Command::Repro { scenario, v } => {
            let report = repro::run(scenario, *v, cli.grid, cli.depth)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
            } else {
                report.print();
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Validate { system } => {
            let text = std::fs::read_to_string(system)
                .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", system.display())))?;
            match behdist_core::system::load_system_str(&text) {
                Ok(c) => {
                    let findings = validate_system(&c);
                    if cli.json {
                        let out = json!({
                            "command": "validate",
                            "ok": findings.is_empty(),
                            "findings": findings.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else if findings.is_empty() {
                        println!("ok: {} states, {} labels", c.state_count(), c.labels.len());
                    } else {
                        for f in &findings {
                            println!("finding: {f}");
                        }
                    }
                    Ok(if findings.is_empty() { 0 } else { 1 })
                }
                Err(SystemError::Validation(f)) => {
                    if cli.json {
                        let out =
                            json!({"command": "validate", "ok": false, "findings": [f.to_string()]});
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!("finding: {f}");
                    }
                    Ok(1)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn build_theory(theory: &str, labels: &str, metric: &str) -> Result<GradedTheory, CliError> {
    let names: Vec<String> = labels.split(',').map(|s| s.trim().to_string()).collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(CliError::Parse("label list must be nonempty".into()));
    }
    let space = if metric == "discrete" {
        LabelSpace::discrete(names).map_err(|e| CliError::Validation(e.to_string()))?
    } else {
        let rows: Result<Vec<Vec<f64>>, _> = metric
            .split(';')
            .map(|row| row.split(',').map(|v| v.trim().parse::<f64>()).collect())
            .collect();
        let rows = rows.map_err(|e| CliError::Parse(format!("bad label matrix: {e}")))?;
        FinMetric::validate(names, rows, MetricKind::Metric)
            .and_then(LabelSpace::new)
            .map_err(|e| CliError::Validation(e.to_string()))?
    };
    let (base, tensor) = match theory {
        "metric" | "metric_trace" => (BaseTheory::Powerset, TensorKind::sup()),
        "fuzzy" => (BaseTheory::Fuzzy, TensorKind::sup()),
        "prob" => (BaseTheory::Dist, TensorKind::manhattan()),
        other => {
            return Err(CliError::Parse(format!(
                "unknown theory `{other}` (expected metric, fuzzy or prob)"
            )))
        }
    };
    build_trace_theory(base, space, tensor).map_err(|e| CliError::Validation(e.to_string()))
}
