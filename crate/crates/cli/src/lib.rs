//! The `tgg` command line tool.
//!
//! Exit codes: 0 success, 1 validation failure or incomplete translation,
//! 2 usage error, 3 I/O or format error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tgg_core::engine::{EngineError, Session};
use tgg_core::rules::{RuleError, RuleViolation};
use tgg_core::serialization::{
    load_protocol, load_ruleset, load_ruleset_unchecked, load_triple, save_protocol, save_triple, FormatError,
};
use tgg_core::view::{build_protocol_view, build_rule_view, render_diagram, DiagramFormat, DisplayOptions, ViewError};
use tgg_core::{validate_rule, DataPackage, OperationKind, Tgg, TripleGraph};
use tgg_server::SessionFactory;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "tgg", version, about = "Triple graph grammar engine")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a rule set against its metamodel.
    Validate {
        #[arg(long)]
        ruleset: PathBuf,
    },
    /// Generate a consistent triple from scratch.
    Gen {
        #[arg(long)]
        ruleset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_steps: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        protocol: Option<PathBuf>,
    },
    /// Translate a source model into a target model.
    Fwd(Translate),
    /// Translate a target model into a source model.
    Bwd(Translate),
    /// Rebuild the triple after step K of a protocol.
    Replay {
        #[arg(long)]
        ruleset: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        at: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a rule or protocol diagram.
    Diagram {
        #[arg(long)]
        ruleset: PathBuf,
        #[arg(long, conflicts_with_all = ["protocol", "select"], required_unless_present = "protocol")]
        rule: Option<String>,
        #[arg(long, requires = "select")]
        protocol: Option<PathBuf>,
        /// Protocol steps to show, e.g. `--select 0,1`.
        #[arg(long, value_delimiter = ',', num_args = 1.., requires = "protocol")]
        select: Vec<usize>,
        #[arg(long)]
        options: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Plantuml)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve an interactive session over TCP or WebSocket.
    Serve {
        #[arg(long)]
        ruleset: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct Translate {
    #[arg(long)]
    ruleset: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = u64::MAX)]
    max_steps: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    protocol: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Plantuml,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Gen,
    Fwd,
    Bwd,
}

impl From<Mode> for OperationKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Gen => OperationKind::Gen,
            Mode::Fwd => OperationKind::Fwd,
            Mode::Bwd => OperationKind::Bwd,
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Argument(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ViewError> for Failure {
    fn from(e: ViewError) -> Self {
        match e {
            ViewError::Engine(inner) => inner.into(),
            ViewError::Options(_) | ViewError::Argument(_) => Failure::new(EXIT_USAGE, e.to_string()),
            _ => Failure::new(EXIT_FAILURE, e.to_string()),
        }
    }
}

fn format_failure(path: &Path, e: FormatError) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {e} (at {})", path.display(), e.location()))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::new(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn ruleset(path: &Path) -> Result<Tgg, Failure> {
    load_ruleset(&read(path)?).map_err(|e| format_failure(path, e))
}

fn triple(path: &Path, tgg: &Tgg) -> Result<TripleGraph, Failure> {
    load_triple(&read(path)?, tgg.metamodel()).map_err(|e| format_failure(path, e))
}

/// What a command reports on success: a line of text and its JSON form.
struct Report {
    text: String,
    json: Value,
    code: u8,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report { text, json, code: EXIT_OK }
    }
}

/// Runs the tool and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let as_json = cli.json;
    match execute(cli.command, out) {
        Ok(report) => {
            let _ = if as_json { writeln!(out, "{}", report.json) } else { writeln!(out, "{}", report.text) };
            report.code
        }
        Err(f) => {
            let _ = if as_json {
                writeln!(err, "{}", json!({ "error": f.message, "exitCode": f.code }))
            } else {
                writeln!(err, "error: {}", f.message)
            };
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<Report, Failure> {
    match command {
        Command::Validate { ruleset } => validate(&ruleset),
        Command::Gen { ruleset: r, seed, max_steps, out: target, protocol } => {
            let tgg = ruleset(&r)?;
            let (session, _) = Session::new(tgg, OperationKind::Gen, TripleGraph::new(), seed)?;
            transform(session, max_steps, &target, protocol.as_deref())
        }
        Command::Fwd(t) => translate(OperationKind::Fwd, t),
        Command::Bwd(t) => translate(OperationKind::Bwd, t),
        Command::Replay { ruleset: r, protocol, at, out: target } => {
            let tgg = ruleset(&r)?;
            let record = load_protocol(&read(&protocol)?, &tgg).map_err(|e| format_failure(&protocol, e))?;
            if at >= record.applications.len() {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("--at {at} out of range for protocol of length {}", record.applications.len()),
                ));
            }
            let state = record.state_after(&tgg, at)?;
            write(&target, &save_triple(&state))?;
            Ok(Report::ok(
                format!("state after step {at}: {} elements -> {}", state.len(), target.display()),
                json!({ "at": at, "elements": state.len(), "out": target }),
            ))
        }
        Command::Diagram { ruleset: r, rule, protocol, select, options, format, out: target } => {
            let tgg = ruleset(&r)?;
            let opts: DisplayOptions = match options {
                Some(path) => serde_json::from_slice(&read(&path)?)
                    .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?,
                None => DisplayOptions::default(),
            };
            let view = match (rule, protocol) {
                (Some(name), _) => {
                    let rule = tgg
                        .rule(&name)
                        .ok_or_else(|| Failure::new(EXIT_USAGE, format!("unknown rule `{name}`")))?;
                    build_rule_view(rule, &opts)?
                }
                (None, Some(path)) => {
                    let record = load_protocol(&read(&path)?, &tgg).map_err(|e| format_failure(&path, e))?;
                    let selection: BTreeSet<usize> = select.into_iter().collect();
                    build_protocol_view(&tgg, &record, &selection, &opts)?
                }
                (None, None) => return Err(Failure::new(EXIT_USAGE, "either --rule or --protocol is required")),
            };
            let format = match format {
                Format::Plantuml => DiagramFormat::Plantuml,
                Format::Dot => DiagramFormat::Dot,
            };
            write(&target, render_diagram(&view, format).as_bytes())?;
            Ok(Report::ok(
                format!("{} nodes, {} edges, {} corrs -> {}", view.nodes.len(), view.edges.len(), view.corrs.len(), target.display()),
                json!({ "nodes": view.nodes.len(), "edges": view.edges.len(), "corrs": view.corrs.len(), "out": target }),
            ))
        }
        Command::Serve { ruleset: r, mode, input, host, port, seed } => {
            let tgg = ruleset(&r)?;
            let kind = OperationKind::from(mode);
            let input = match (input, kind) {
                (Some(path), _) => triple(&path, &tgg)?,
                (None, OperationKind::Gen) => TripleGraph::new(),
                (None, _) => return Err(Failure::new(EXIT_USAGE, format!("--input is required for {kind}"))),
            };
            // Fail before listening if the input is unusable.
            Session::new(tgg.clone(), kind, input.clone(), seed)?;
            let listener = TcpListener::bind((host.as_str(), port))
                .map_err(|e| Failure::new(EXIT_IO, format!("cannot listen on {host}:{port}: {e}")))?;
            let addr = listener.local_addr().map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
            let _ = writeln!(out, "listening on {addr} ({kind}, WebSocket or line-delimited JSON)");
            let _ = out.flush();
            let factory: SessionFactory =
                Arc::new(move || Session::new(tgg.clone(), kind, input.clone(), seed).expect("checked above").0);
            tgg_server::serve(listener, factory).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
            Ok(Report::ok(String::new(), Value::Null))
        }
    }
}

fn validate(path: &Path) -> Result<Report, Failure> {
    let unchecked = load_ruleset_unchecked(&read(path)?).map_err(|e| format_failure(path, e))?;
    let mut violations: Vec<RuleViolation> =
        unchecked.rules.iter().flat_map(|r| validate_rule(r, &unchecked.metamodel)).collect();
    let mut problems: Vec<String> = violations.iter().map(ToString::to_string).collect();
    if violations.is_empty() {
        if let Err(e) = Tgg::new(unchecked.name.clone(), unchecked.metamodel.clone(), unchecked.rules.clone()) {
            if let RuleError::Invalid(found) = &e {
                violations.extend(found.iter().cloned());
            }
            problems.push(e.to_string());
        }
    }
    let text = if problems.is_empty() {
        format!("{}: {} rules, no violations", unchecked.name, unchecked.rules.len())
    } else {
        problems.join("\n")
    };
    Ok(Report {
        text,
        json: json!({ "ruleset": unchecked.name, "rules": unchecked.rules.len(), "violations": violations, "problems": problems }),
        code: if problems.is_empty() { EXIT_OK } else { EXIT_FAILURE },
    })
}

fn translate(kind: OperationKind, t: Translate) -> Result<Report, Failure> {
    let tgg = ruleset(&t.ruleset)?;
    let input = triple(&t.input, &tgg)?;
    let (session, _) = Session::new(tgg, kind, input, t.seed)?;
    transform(session, t.max_steps, &t.out, t.protocol.as_deref())
}

fn transform(mut session: Session, max_steps: u64, out: &Path, protocol: Option<&Path>) -> Result<Report, Failure> {
    let package: DataPackage = session.run_background(max_steps)?;
    write(out, &save_triple(session.triple()))?;
    if let Some(path) = protocol {
        write(path, &save_protocol(&session.protocol_record()))?;
    }
    let halt = package.halt_reason.map(|h| serde_json::to_value(h).unwrap()).unwrap_or(Value::Null);
    let mut text = format!(
        "{}: {} steps, halted {} -> {}",
        session.kind(),
        package.protocol_length,
        halt.as_str().unwrap_or("-"),
        out.display()
    );
    let mut code = EXIT_OK;
    if let Some(report) = &package.incomplete {
        code = EXIT_FAILURE;
        text.push_str(&format!(
            "\nINCOMPLETE: {} unmarked elements: {}",
            report.unmarked_element_ids.len(),
            report.unmarked_element_ids.join(", ")
        ));
    }
    Ok(Report {
        text,
        json: json!({
            "operation": session.kind(),
            "protocolLength": package.protocol_length,
            "haltReason": halt,
            "incomplete": package.incomplete,
            "out": out,
        }),
        code,
    })
}
