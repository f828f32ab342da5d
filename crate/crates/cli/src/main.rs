//! `rbn`: check models, answer queries, print dependency formulas.
//!
//! Exit codes: 0 success, 1 validation or parse error, 2 inconsistent
//! evidence, 3 ill-founded recursion, 4 resource budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use rbn::dependency::{
    ancestor_formula, check_wellfounded, normalize, structural_formula, var_names, DependencyError,
};
use rbn::fol::{readable, translate};
use rbn::frontend::{parse_fo, parse_model, parse_scenario, Scenario};
use rbn::oracle::DEFAULT_BUDGET_BITS;
use rbn::{
    brute_force_conditional, format_probability, infer_with, CompiledNetwork, ElimOrder, GroundAtom, GroundingError,
    InferenceError, InferenceOptions,
};

#[derive(Parser)]
#[command(name = "rbn", version, about = "Relational Bayesian networks: exact inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model.
    Check {
        model: PathBuf,
        /// Acknowledge that the model is recursive.
        #[arg(long)]
        recursive: bool,
    },
    /// Answer the scenario's queries.
    Infer {
        model: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        json: bool,
        /// Also answer by brute-force enumeration and report the difference.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET_BITS)]
        budget_bits: usize,
        #[arg(long, value_enum, default_value_t = Order::Minfill)]
        elim_order: Order,
    },
    /// Print the dependency formula of `relation` on `parent`.
    Deps {
        model: PathBuf,
        relation: String,
        parent: String,
        /// Follow all paths, not just direct parents.
        #[arg(long)]
        ancestor: bool,
    },
    /// Compile a first-order formula into a probability formula.
    TranslateFol {
        formula: String,
        /// Print disjunctions as `max` terms.
        #[arg(long)]
        readable: bool,
    },
    /// Answer the scenario's queries by enumeration only.
    Oracle {
        model: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET_BITS)]
        budget_bits: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Minfill,
    Lex,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

fn inference_failure(e: &InferenceError) -> Failure {
    let code = match e {
        InferenceError::InconsistentEvidence => 2,
        InferenceError::Budget { .. } => 4,
        InferenceError::Grounding(GroundingError::IllFounded(_)) => 3,
        InferenceError::Grounding(GroundingError::Eval(rbn::EvalError::IllFounded(_)))
        | InferenceError::Eval(rbn::EvalError::IllFounded(_) | rbn::EvalError::Undetermined(_)) => 3,
        _ => 1,
    };
    Failure::new(code, e)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<CompiledNetwork, Failure> {
    let text = read(path)?;
    let (_, n) = parse_model(&text).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    n.compile().map_err(|e| Failure::new(1, e))
}

fn load_scenario(n: &CompiledNetwork, path: &Path) -> Result<Scenario, Failure> {
    let text = read(path)?;
    let doc = parse_scenario(&text).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    Scenario::resolve(&doc, n.vocabulary()).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

/// Recursive models always report well-foundedness on the scenario.
fn report_wellfounded(n: &CompiledNetwork, sc: &Scenario, json: bool) -> Result<(), Failure> {
    if !n.has_recursion() {
        return Ok(());
    }
    match check_wellfounded(n, &sc.structure) {
        Ok(()) => {
            if json {
                println!("{}", serde_json::json!({ "wellfounded": true }));
            } else {
                println!("well-founded: yes");
            }
            Ok(())
        }
        Err(w) => {
            if json {
                println!("{}", serde_json::json!({ "wellfounded": false, "cycle": w.names }));
            } else {
                println!("well-founded: no");
            }
            Err(Failure::new(3, format!("recursive definition is not well-founded: {w}")))
        }
    }
}

#[derive(Serialize)]
struct Record {
    query: String,
    probability: f64,
    nodes: usize,
    edges: usize,
    width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    time_ms: f64,
}

fn rounded(p: f64) -> f64 {
    format_probability(p).parse().unwrap_or(p)
}

fn print_record(r: &Record, json: bool) {
    if json {
        println!("{}", serde_json::to_string(r).expect("records serialize"));
        return;
    }
    let mut line = format!(
        "P({}) = {}  nodes={} edges={} width={}",
        r.query,
        format_probability(r.probability),
        r.nodes,
        r.edges,
        r.width
    );
    if let (Some(o), Some(d)) = (r.oracle, r.delta) {
        line.push_str(&format!("  oracle={} delta={:.3e}", format_probability(o), d));
    }
    line.push_str(&format!("  time={:.3}ms", r.time_ms));
    println!("{line}");
}

fn atom_name(n: &CompiledNetwork, sc: &Scenario, q: &GroundAtom) -> String {
    q.display(n.vocabulary(), sc.structure.domain()).to_string()
}

/// Prints records in scenario order and returns the first failure.
fn emit(results: Vec<Result<Record, Failure>>, json: bool) -> Result<(), Failure> {
    let mut first = None;
    for r in results {
        match r {
            Ok(rec) => print_record(&rec, json),
            Err(f) => {
                first.get_or_insert(f);
            }
        }
    }
    first.map_or(Ok(()), Err)
}

fn cmd_infer(
    model: &Path,
    scenario: &Path,
    json: bool,
    oracle: bool,
    budget_bits: usize,
    order: Order,
) -> Result<(), Failure> {
    let n = load_model(model)?;
    let sc = load_scenario(&n, scenario)?;
    report_wellfounded(&n, &sc, json)?;
    let options = InferenceOptions {
        order: match order {
            Order::Minfill => ElimOrder::MinFill,
            Order::Lex => ElimOrder::Lex,
        },
        budget_bits,
    };
    let results: Vec<Result<Record, Failure>> = sc
        .queries
        .par_iter()
        .map(|q| {
            let start = Instant::now();
            let r = infer_with::<f64>(&n, &sc.structure, &sc.evidence, q, &options).map_err(|e| inference_failure(&e))?;
            let time_ms = start.elapsed().as_secs_f64() * 1e3;
            let (oracle, delta) = if oracle {
                let o = brute_force_conditional::<f64>(&n, &sc.structure, &sc.evidence, q, budget_bits)
                    .map_err(|e| inference_failure(&e))?;
                (Some(rounded(o)), Some((o - r.probability).abs()))
            } else {
                (None, None)
            };
            Ok(Record {
                query: atom_name(&n, &sc, q),
                probability: rounded(r.probability),
                nodes: r.nodes,
                edges: r.edges,
                width: r.width,
                oracle,
                delta,
                time_ms,
            })
        })
        .collect();
    emit(results, json)
}

fn cmd_oracle(model: &Path, scenario: &Path, json: bool, budget_bits: usize) -> Result<(), Failure> {
    let n = load_model(model)?;
    let sc = load_scenario(&n, scenario)?;
    report_wellfounded(&n, &sc, json)?;
    let results: Vec<Result<Record, Failure>> = sc
        .queries
        .par_iter()
        .map(|q| {
            let start = Instant::now();
            let p = brute_force_conditional::<f64>(&n, &sc.structure, &sc.evidence, q, budget_bits)
                .map_err(|e| inference_failure(&e))?;
            Ok(Record {
                query: atom_name(&n, &sc, q),
                probability: rounded(p),
                nodes: 0,
                edges: 0,
                width: 0,
                oracle: None,
                delta: None,
                time_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect();
    emit(results, json)
}

fn cmd_check(model: &Path, recursive: bool) -> Result<(), Failure> {
    let text = read(model)?;
    let n = match parse_model(&text) {
        Ok((_, n)) => n,
        Err(rbn::frontend::ModelError::Validation(report)) => {
            for v in &report.violations {
                println!("{v}");
            }
            return Err(Failure::new(1, format!("{}: {} violation(s)", model.display(), report.violations.len())));
        }
        Err(e) => return Err(Failure::new(1, format!("{}: {e}", model.display()))),
    };
    let n = n.compile().map_err(|e| Failure::new(1, e))?;
    let rec: Vec<&str> = n
        .topological_order()
        .iter()
        .filter(|&&r| n.is_recursive(r))
        .map(|&r| n.vocabulary().relation_name(r))
        .collect();
    if !rec.is_empty() && !recursive {
        eprintln!(
            "warning: recursive relation(s) {}; well-foundedness depends on the rigid structure and is checked by `infer`",
            rec.join(", ")
        );
    }
    println!("valid");
    Ok(())
}

fn cmd_deps(model: &Path, relation: &str, parent: &str, ancestor: bool) -> Result<(), Failure> {
    let n = load_model(model)?;
    let vocab = n.vocabulary();
    let rel = |name: &str| {
        vocab
            .relation_id(name)
            .filter(|&r| !vocab.is_rigid(r))
            .ok_or_else(|| Failure::new(1, format!("unknown probabilistic relation `{name}`")))
    };
    let (r, r2) = (rel(relation)?, rel(parent)?);
    let d = if ancestor {
        ancestor_formula(&n, r, r2).map_err(|e: DependencyError| Failure::new(1, e))?
    } else {
        structural_formula(&n, r, r2)
    };
    let names = var_names(&n, r, r2);
    let head = format!("pa({relation}, {parent})({}; {})", names.x.join(", "), names.y.join(", "));
    println!("{head} := {}", d.display(&names, vocab));
    match normalize(&d) {
        Ok(nf) => println!("normal form: {}", nf.display(&names)),
        Err(_) => println!("normal form: none (uses rigid symbols or constants)"),
    }
    Ok(())
}

fn cmd_translate(text: &str, pretty: bool) -> Result<(), Failure> {
    let phi = parse_fo(text).map_err(|e| Failure::new(1, e))?;
    let f = translate(&phi);
    println!("{}", if pretty { readable(&f) } else { f });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { model, recursive } => cmd_check(model, *recursive),
        Command::Infer { model, scenario, json, oracle, budget_bits, elim_order } => {
            cmd_infer(model, scenario, *json, *oracle, *budget_bits, *elim_order)
        }
        Command::Deps { model, relation, parent, ancestor } => cmd_deps(model, relation, parent, *ancestor),
        Command::TranslateFol { formula, readable } => cmd_translate(formula, *readable),
        Command::Oracle { model, scenario, json, budget_bits } => cmd_oracle(model, scenario, *json, *budget_bits),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
