//! Batch command-line front end: verdicts and witnesses over the text
//! formats. Diagnostics go to stderr, results to stdout. Exit codes:
//! 0 positive verdict, 1 negative verdict, 2 usage or validation error.

use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hnamc::filtration::check_formula_against_open_kripke;
use hnamc::kripke::SegmentMode;
use hnamc::logic::{self, Formula};
use hnamc::oracle::bf_check_hna;
use hnamc::parse::{
    parse_formula, parse_hna, parse_kripke, parse_segment, parse_sfa, serialize_kripke,
    serialize_sfa, ParsedKripke,
};
use hnamc::sfa::ops::{complement, complete, determinize, intersection, union};
use hnamc::sfa::Sfa;
use hnamc::slicing::{model_check, Verdict};

#[derive(Parser)]
#[command(name = "hnamc", version, about = "Hypernode-automata model checker")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a hypernode automaton against a pointed action-labeled Kripke structure.
    Check(CheckArgs),
    /// Check a hypernode-logic formula against an open Kripke structure.
    CheckFormula(CheckFormulaArgs),
    /// Operations on stutter-free automata (`.sfa` files).
    #[command(subcommand)]
    Sfa(SfaCmd),
    /// Brute-force reference engines (bounded enumeration).
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Args)]
struct CheckArgs {
    /// Pointed labeled Kripke structure (`init` + `actions` required).
    #[arg(long)]
    kripke: PathBuf,
    /// Hypernode automaton file.
    #[arg(long)]
    hna: PathBuf,
    /// Cap the exploration depth (verdict `unknown` if hit before closure).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckFormulaArgs {
    /// Open Kripke structure (`in`/`out` required).
    #[arg(long)]
    kripke: PathBuf,
    /// Formula text.
    #[arg(long, conflicts_with = "formula_file")]
    formula: Option<String>,
    /// File containing the formula (`#` line comments allowed).
    #[arg(long)]
    formula_file: Option<PathBuf>,
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum SfaCmd {
    /// Check the stutter-freedom and termination conditions.
    Validate { file: PathBuf },
    /// Synchronous product (language intersection) of two automata.
    Product { a: PathBuf, b: PathBuf },
    /// Disjoint union of two automata.
    Union { a: PathBuf, b: PathBuf },
    /// Subset determinization.
    Determinize { file: PathBuf },
    /// Completion of a deterministic automaton.
    Complete { file: PathBuf },
    /// Complement of a deterministic, complete automaton.
    Complement { file: PathBuf },
    /// Emptiness; prints a shortest witness when non-empty (exit 1).
    Empty { file: PathBuf },
    /// Membership of a segment, e.g. --segment "x=010 y=01".
    Member {
        file: PathBuf,
        #[arg(long)]
        segment: String,
    },
    /// All language members with strings up to --max-len, one per line.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        max_len: usize,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Brute-force formula check over enumerated path segments.
    CheckFormula {
        #[arg(long)]
        kripke: PathBuf,
        #[arg(long, conflicts_with = "formula_file")]
        formula: Option<String>,
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Maximum path length (worlds) to enumerate; must be positive.
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Segment-set reading: product (pipeline semantics) or joint.
        #[arg(long, default_value = "product")]
        mode: String,
    },
    /// Brute-force acceptance check over enumerated labeled traces.
    CheckHna {
        #[arg(long)]
        kripke: PathBuf,
        #[arg(long)]
        hna: PathBuf,
        /// Maximum trace length (worlds) to enumerate; must be positive.
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Maximum action-sequence length to check; must be positive.
        #[arg(long, default_value_t = 4)]
        max_actions: usize,
    },
}

struct Failure {
    message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let color = match std::env::var("HNAMC_COLOR").as_deref() {
                Ok("never") => false,
                Ok("auto") | Err(_) => std::io::stderr().is_terminal(),
                Ok(_) => std::io::stderr().is_terminal(),
            };
            if color {
                eprintln!("\x1b[1;31merror:\x1b[0m {}", f.message);
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure { message: format!("cannot read {}: {e}", path.display()) })
}

fn load_kripke(path: &Path) -> Result<ParsedKripke, Failure> {
    let text = read(path)?;
    parse_kripke(&text).map_err(|e| Failure { message: format!("{}: {e}", path.display()) })
}

fn load_sfa(path: &Path) -> Result<Sfa, Failure> {
    let text = read(path)?;
    parse_sfa(&text).map_err(|e| Failure { message: format!("{}: {e}", path.display()) })
}

fn load_formula(
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> Result<(Formula, String), Failure> {
    let text = match (inline, file) {
        (Some(t), None) => t.clone(),
        (None, Some(p)) => {
            let raw = read(p)?;
            raw.lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        }
        _ => {
            return Err(Failure {
                message: "exactly one of --formula or --formula-file is required".into(),
            })
        }
    };
    let phi = parse_formula(&text)?;
    if !phi.is_closed() {
        return Err(Failure {
            message: format!(
                "formula is open: free trace variables {:?}",
                logic::free_trace_vars(&phi)
            ),
        });
    }
    Ok((phi, text.trim().to_string()))
}

#[derive(Serialize)]
struct CheckReport {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slice: Option<String>,
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Check(args) => cmd_check(args),
        Cmd::CheckFormula(args) => cmd_check_formula(args),
        Cmd::Sfa(cmd) => cmd_sfa(cmd),
        Cmd::Oracle(cmd) => cmd_oracle(cmd),
    }
}

fn cmd_check(args: CheckArgs) -> Result<u8, Failure> {
    let parsed = load_kripke(&args.kripke)?;
    let model = parsed.to_pointed()?;
    let hna_text = read(&args.hna)?;
    let hna = parse_hna(&hna_text)?;
    let problems: Vec<String> = hna
        .validate()
        .into_iter()
        .filter(|p| !p.starts_with("warning"))
        .collect();
    if !problems.is_empty() {
        return Err(Failure { message: problems.join("; ") });
    }
    if let Some(world) = model.epsilon_only_cycle() {
        eprintln!(
            "warning: reachable cycle through `{world}` carries only eps labels; \
             infinite traces on it emit finitely many actions"
        );
    }
    match model_check(&hna, &model, args.max_depth)? {
        Verdict::Holds => {
            if args.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&CheckReport {
                        verdict: "holds",
                        witness: None,
                        node: None,
                        formula: None,
                        slice: None,
                    })?
                );
            } else {
                println!("HOLDS");
            }
            Ok(0)
        }
        Verdict::Violated(cex) => {
            let witness: Vec<String> = cex
                .witness
                .iter()
                .map(|&a| model.actions()[a].clone())
                .collect();
            let node = hna.node(cex.node);
            let slice_dump = serialize_kripke(&ParsedKripke {
                kripke: cex.substructure.kripke.clone(),
                labeling: None,
                entries: Some(cex.substructure.entries.clone()),
                exits: Some(cex.substructure.exits.clone()),
                initial: None,
            });
            if args.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&CheckReport {
                        verdict: "violated",
                        witness: Some(witness),
                        node: Some(node.name.clone()),
                        formula: Some(node.label_text.clone()),
                        slice: Some(slice_dump),
                    })?
                );
            } else {
                println!("VIOLATED");
                println!("witness: {}", witness.join(" "));
                println!("node: {}", node.name);
                println!("formula: {}", node.label_text);
                println!("offending slice:");
                for line in slice_dump.lines() {
                    println!("  {line}");
                }
            }
            Ok(1)
        }
        Verdict::Unknown => {
            if args.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&CheckReport {
                        verdict: "unknown",
                        witness: None,
                        node: None,
                        formula: None,
                        slice: None,
                    })?
                );
            } else {
                println!("UNKNOWN (depth cap reached)");
            }
            Ok(2)
        }
    }
}

#[derive(Serialize)]
struct FormulaReport {
    verdict: &'static str,
    formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

fn cmd_check_formula(args: CheckFormulaArgs) -> Result<u8, Failure> {
    let parsed = load_kripke(&args.kripke)?;
    let ok = parsed.to_open()?;
    let (phi, text) = load_formula(&args.formula, &args.formula_file)?;
    let outcome = check_formula_against_open_kripke(&ok, &phi)?;
    let witness = outcome
        .witness
        .as_ref()
        .map(|w| w.display(&outcome.composed_vars, ok.kripke.domain()));
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&FormulaReport {
                verdict: if outcome.holds { "model" } else { "not-a-model" },
                formula: text,
                witness: witness.clone(),
            })?
        );
    } else if outcome.holds {
        println!("MODEL");
    } else {
        println!("NOT A MODEL");
        if let Some(w) = witness {
            println!("counterexample assignment: {w}");
        }
    }
    Ok(if outcome.holds { 0 } else { 1 })
}

fn cmd_sfa(cmd: SfaCmd) -> Result<u8, Failure> {
    match cmd {
        SfaCmd::Validate { file } => {
            let a = load_sfa(&file)?;
            let violations = a.validate();
            if violations.is_empty() {
                println!("ok");
                Ok(0)
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Ok(1)
            }
        }
        SfaCmd::Product { a, b } => {
            let x = load_sfa(&a)?;
            let y = load_sfa(&b)?;
            print!("{}", serialize_sfa(&intersection(&x, &y)?));
            Ok(0)
        }
        SfaCmd::Union { a, b } => {
            let x = load_sfa(&a)?;
            let y = load_sfa(&b)?;
            print!("{}", serialize_sfa(&union(&x, &y)?));
            Ok(0)
        }
        SfaCmd::Determinize { file } => {
            let a = load_sfa(&file)?;
            print!("{}", serialize_sfa(&determinize(&a)));
            Ok(0)
        }
        SfaCmd::Complete { file } => {
            let a = load_sfa(&file)?;
            let c = complete(&a)
                .map_err(|e| Failure { message: format!("{e}; run `determinize` first") })?;
            print!("{}", serialize_sfa(&c));
            Ok(0)
        }
        SfaCmd::Complement { file } => {
            let a = load_sfa(&file)?;
            let c = complement(&a)
                .map_err(|e| Failure { message: format!("{e}; run `complete` first") })?;
            print!("{}", serialize_sfa(&c));
            Ok(0)
        }
        SfaCmd::Empty { file } => {
            let a = load_sfa(&file)?;
            match a.shortest_witness() {
                None => {
                    println!("empty");
                    Ok(0)
                }
                Some(w) => {
                    println!("non-empty: {}", w.display(a.vars(), a.domain()));
                    Ok(1)
                }
            }
        }
        SfaCmd::Member { file, segment } => {
            let a = load_sfa(&file)?;
            let seg = parse_segment(&segment, a.vars(), a.domain())?;
            if a.member(&seg)? {
                println!("member");
                Ok(0)
            } else {
                println!("not a member");
                Ok(1)
            }
        }
        SfaCmd::Enumerate { file, max_len } => {
            let a = load_sfa(&file)?;
            for seg in a.enumerate_language(max_len) {
                println!("{}", seg.display(a.vars(), a.domain()));
            }
            Ok(0)
        }
    }
}

fn exactness(acyclic: bool) -> &'static str {
    if acyclic {
        "exact"
    } else {
        "bounded"
    }
}

fn cmd_oracle(cmd: OracleCmd) -> Result<u8, Failure> {
    match cmd {
        OracleCmd::CheckFormula {
            kripke,
            formula,
            formula_file,
            max_len,
            mode,
        } => {
            if max_len == 0 {
                return Err(Failure { message: "--max-len must be positive".into() });
            }
            let mode = match mode.as_str() {
                "product" => SegmentMode::Product,
                "joint" => SegmentMode::Joint,
                other => {
                    return Err(Failure {
                        message: format!("unknown mode `{other}` (use product or joint)"),
                    })
                }
            };
            let parsed = load_kripke(&kripke)?;
            let ok = parsed.to_open()?;
            let (phi, _) = load_formula(&formula, &formula_file)?;
            let verdict = hnamc::oracle::bf_check_formula(&ok, &phi, max_len, mode)?;
            println!(
                "{} ({})",
                if verdict { "MODEL" } else { "NOT A MODEL" },
                exactness(ok.is_acyclic())
            );
            Ok(if verdict { 0 } else { 1 })
        }
        OracleCmd::CheckHna {
            kripke,
            hna,
            max_len,
            max_actions,
        } => {
            if max_len == 0 || max_actions == 0 {
                return Err(Failure { message: "bounds must be positive".into() });
            }
            let parsed = load_kripke(&kripke)?;
            let model = parsed.to_pointed()?;
            let hna_text = read(&hna)?;
            let hna = parse_hna(&hna_text)?;
            let verdict = bf_check_hna(&model, &hna, max_len, max_actions)?;
            let tag = exactness(model.is_acyclic());
            match verdict {
                hnamc::hna::OracleVerdict::Accepted => {
                    println!("HOLDS ({tag})");
                    Ok(0)
                }
                hnamc::hna::OracleVerdict::Rejected { p, slice, node } => {
                    let names: Vec<String> =
                        p.iter().map(|&a| model.actions()[a].clone()).collect();
                    println!("VIOLATED ({tag})");
                    println!("witness: {}", names.join(" "));
                    println!("slice index: {slice}");
                    println!("node: {}", hna.node(node).name);
                    println!("formula: {}", hna.node(node).label_text);
                    Ok(1)
                }
            }
        }
    }
}
