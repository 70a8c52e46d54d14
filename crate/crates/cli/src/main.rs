use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use westin_core::dsl::{self, Document, ParseError};
use westin_core::engine::{self, EngineConfig, EngineError, RunReport};
use westin_core::patterns::{self, Blocklist};
use westin_core::TemplateName;

const OK: u8 = 0;
const FORBID: u8 = 1;
const STRUCTURAL: u8 = 2;
const PARSE: u8 = 3;
const USAGE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "westin",
    version,
    about = "Check privacy-pattern models and replay event traces against them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model and list violations and lints.
    Check {
        model: PathBuf,
        /// Only legal persons may own entities.
        #[arg(long)]
        strict_ownership: bool,
    },
    /// Replay a trace against a model.
    Run {
        model: PathBuf,
        trace: PathBuf,
        /// Apply forbidden actions anyway and only record the verdicts.
        #[arg(long)]
        monitor: bool,
        /// Also write the JSON report to this file.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        /// Print the JSON report instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// Show the rule chain behind one event of a saved report.
    Explain { report: PathBuf, seq: u64 },
    /// Print a model or trace in canonical form.
    Fmt {
        file: PathBuf,
        /// Exit with status 1 if the file is not already canonical.
        #[arg(long, conflicts_with = "write")]
        check: bool,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    /// List the pattern templates or write a starter model.
    Patterns {
        #[command(subcommand)]
        action: PatternsAction,
    },
}

#[derive(Subcommand)]
enum PatternsAction {
    /// Print every template with its roles, parameters and bundled rules.
    List,
    /// Write a starter model for a template (`-` for stdout).
    Scaffold { template: String, outfile: PathBuf },
}

/// A failed command: the exit status and what to print on stderr.
struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure(USAGE, msg.into())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// Renders a parse error with the offending line and a caret under the span.
fn diagnostic(err: &ParseError, source: &[u8]) -> String {
    let mut out = format!("{}: error[{}]: {}\n", err.span, err.code, err.message);
    let text = String::from_utf8_lossy(source);
    if let Some(line) = text.lines().nth(err.span.line.saturating_sub(1)) {
        let pad = " ".repeat(err.span.column.saturating_sub(1));
        let marks = "^".repeat(err.span.length.max(1));
        out.push_str(&format!("  | {line}\n  | {pad}{marks}\n"));
    }
    if !err.expected.is_empty() && err.expected.len() <= 8 {
        out.push_str(&format!("  = expected {}\n", err.expected.join(", ")));
    }
    out
}

fn load_model(path: &Path) -> Result<Document, Failure> {
    let bytes = read(path)?;
    dsl::parse_model_bytes(&bytes, &path.display().to_string()).map_err(|e| Failure(PARSE, diagnostic(&e, &bytes)))
}

fn cmd_check(path: &Path, strict: bool) -> Outcome {
    let mut doc = load_model(path)?;
    doc.model.set_strict_ownership(strict);
    let violations = westin_core::check(&doc.model);
    for v in &violations {
        println!("error[{}]: {v}", v.kind());
    }
    for l in dsl::lint(&doc) {
        println!("{l}");
    }
    if violations.is_empty() {
        println!("{}: ok", path.display());
        Ok(OK)
    } else {
        println!("{}: {} violation(s)", path.display(), violations.len());
        Ok(STRUCTURAL)
    }
}

fn engine_config(monitor: bool) -> Result<EngineConfig, Failure> {
    let mut config = EngineConfig {
        monitor,
        ..EngineConfig::default()
    };
    if let Some(path) = std::env::var_os("WESTIN_BLOCKLIST") {
        let path = PathBuf::from(path);
        let text =
            fs::read_to_string(&path).map_err(|e| usage(format!("cannot read blocklist {}: {e}", path.display())))?;
        config.offensive = Arc::new(Blocklist::parse(&text));
    }
    Ok(config)
}

/// Structural trouble outranks forbids and breaches.
fn run_status(report: &RunReport) -> u8 {
    if report.summary.structural_errors > 0 || !report.summary.final_violations.is_empty() {
        STRUCTURAL
    } else if report.has_forbids_or_breaches() {
        FORBID
    } else {
        OK
    }
}

fn cmd_run(model: &Path, trace: &Path, monitor: bool, report_path: Option<&Path>, json: bool) -> Outcome {
    let doc = load_model(model)?;
    let bytes = read(trace)?;
    let events = dsl::parse_trace_bytes(&bytes, &trace.display().to_string())
        .map_err(|e| Failure(PARSE, diagnostic(&e, &bytes)))?;
    let config = engine_config(monitor)?;
    let report = match engine::run(doc.model, &events, config) {
        Ok(r) => r,
        Err(EngineError::InvalidInitialModel(violations)) => {
            let mut msg = format!("{}: model is invalid\n", model.display());
            for v in violations {
                msg.push_str(&format!("error[{}]: {v}\n", v.kind()));
            }
            return Err(Failure(STRUCTURAL, msg));
        }
        Err(e) => return Err(Failure(PARSE, e.to_string())),
    };
    let text = report.to_json();
    if let Some(path) = report_path {
        write(path, &text)?;
    }
    if json {
        print!("{text}");
    } else {
        for e in &report.events {
            let rule = e.chain.last().map_or(String::new(), |l| format!(" [{}]", l.rule));
            println!("#{} {} {} -> {}{rule}", e.seq, e.actor, e.verb, e.outcome);
            for v in &e.violations {
                println!("    ! {v}");
            }
        }
        print!("{}", report.human_summary());
    }
    Ok(run_status(&report))
}

fn cmd_explain(path: &Path, seq: u64) -> Outcome {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Failure(PARSE, format!("{}: not UTF-8", path.display())))?;
    let report = RunReport::from_json(&text).map_err(|e| Failure(PARSE, format!("{}: {e}", path.display())))?;
    match engine::explain(&report, seq) {
        Some(s) => {
            print!("{s}");
            Ok(OK)
        }
        None => Err(usage(format!("{} has no event {seq}", path.display()))),
    }
}

fn cmd_fmt(path: &Path, check: bool, write_back: bool) -> Outcome {
    let bytes = read(path)?;
    let file = path.display().to_string();
    let canonical = if path.extension().is_some_and(|e| e == "wtrace") {
        let events = dsl::parse_trace_bytes(&bytes, &file).map_err(|e| Failure(PARSE, diagnostic(&e, &bytes)))?;
        dsl::render_trace(&events)
    } else {
        let doc = dsl::parse_model_bytes(&bytes, &file).map_err(|e| Failure(PARSE, diagnostic(&e, &bytes)))?;
        dsl::render_model(&doc.model)
    };
    let same = canonical.as_bytes() == bytes.as_slice();
    if check {
        if same {
            return Ok(OK);
        }
        eprintln!("{file}: not in canonical form");
        return Ok(FORBID);
    }
    if write_back {
        if !same {
            write(path, &canonical)?;
        }
    } else {
        print!("{canonical}");
    }
    Ok(OK)
}

fn cmd_patterns(action: PatternsAction) -> Outcome {
    match action {
        PatternsAction::List => {
            print!("{}", patterns::catalog());
            Ok(OK)
        }
        PatternsAction::Scaffold { template, outfile } => {
            let name: TemplateName = template.parse().map_err(|_| {
                let names: Vec<&str> = TemplateName::ALL.iter().map(|t| t.as_str()).collect();
                usage(format!(
                    "unknown template `{template}`; expected one of {}",
                    names.join(", ")
                ))
            })?;
            let text = patterns::scaffold(name);
            if outfile.as_os_str() == "-" {
                print!("{text}");
            } else {
                write(&outfile, &text)?;
            }
            Ok(OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check {
            model,
            strict_ownership,
        } => cmd_check(&model, strict_ownership),
        Command::Run {
            model,
            trace,
            monitor,
            report,
            json,
        } => cmd_run(&model, &trace, monitor, report.as_deref(), json),
        Command::Explain { report, seq } => cmd_explain(&report, seq),
        Command::Fmt { file, check, write } => cmd_fmt(&file, check, write),
        Command::Patterns { action } => cmd_patterns(action),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprint!("{msg}");
            if !msg.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(code)
        }
    }
}
