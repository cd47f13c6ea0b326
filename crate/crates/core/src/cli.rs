// SPDX-License-Identifier: Apache-2.0

//! `ccdfg` command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (validation violations, runtime
//! errors, synthesis errors, failed checks), 2 usage or parse errors.
//! `CCDFG_WIDTH` overrides the word width.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::equiv::{self, CheckKind, CheckOptions, CheckReport, StateSpace, Subject, SweepConfig};
use crate::interp::{CcdfgState, Interpreter};
use crate::ir::{validate_pipelinable, validate_pipelined, BlockLabel, Ccdfg, Diagnostic, Width, DEFAULT_WIDTH};
use crate::synth;
use crate::textio::{self, CcdfgDocument, Design, RunCountError};

pub const WIDTH_ENV: &str = "CCDFG_WIDTH";

#[derive(Debug, Parser)]
#[command(
    name = "ccdfg",
    version,
    about = "Clocked control data flow graph interpreter, loop pipeliner and equivalence checker"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output style
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the primary output here instead of stdout
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    MachineReadable,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a design against the pipelinability restrictions
    Validate(ValidateArgs),
    /// Execute a design and print the final state
    Run(RunArgs),
    /// Generate the reference pipelined design
    Pipeline(PipelineArgs),
    /// Compare pipelined and sequential runs after the epilogue
    CheckEquiv(CheckArgs),
    /// Compare pipelined and sequential runs after each full-stage traversal
    CheckInvariant(CheckArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("init").required(true).args(["state", "zero_init"]))]
pub struct RunArgs {
    pub input: PathBuf,
    /// Initial state (.cstate)
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Bind every live-in variable, memory word and pointer to 0
    #[arg(long)]
    pub zero_init: bool,
    /// Loop iterations. For a pipelined design produced by `pipeline` this
    /// counts source iterations
    #[arg(short = 'k', long = "iterations", default_value_t = 1)]
    pub iterations: u64,
    /// Print one record per cycle
    #[arg(long)]
    pub trace: bool,
    /// Memory words for --zero-init
    #[arg(long, default_value_t = 16)]
    pub mem_size: u64,
    /// Label of the block executed before the design
    #[arg(long)]
    pub prev: Option<String>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub input: PathBuf,
    /// Initiation interval in cycles
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub interval: u64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    /// Initiation interval in cycles
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub interval: u64,
    /// Check k = 1..=kmax
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub kmax: u64,
    /// Random initial states per k
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Memory words in each random state
    #[arg(long, default_value_t = 16)]
    pub mem_size: u64,
    /// Check this pipelined design instead of the generated one
    #[arg(long)]
    pub pipelined_input: Option<PathBuf>,
}

/// How a command ended, before rendering.
#[derive(Debug)]
struct Outcome {
    code: i32,
    text: String,
    json: Json,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    kind: String,
    message: String,
}

impl Failure {
    fn usage(kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: kind.into(),
            message: message.into(),
        }
    }

    fn domain(kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                2
            } else {
                let _ = write!(stdout, "{rendered}");
                0
            };
        }
    };
    let command = match &cli.command {
        Command::Validate(_) => "validate",
        Command::Run(_) => "run",
        Command::Pipeline(_) => "pipeline",
        Command::CheckEquiv(_) => "check-equiv",
        Command::CheckInvariant(_) => "check-invariant",
    };
    let result = width_from_env().and_then(|width| match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Run(a) => cmd_run(a, width),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::CheckEquiv(a) => cmd_check(a, CheckKind::Correctness, width),
        Command::CheckInvariant(a) => cmd_check(a, CheckKind::Invariant, width),
    });
    let outcome = match result {
        Ok(o) => o,
        Err(f) => {
            if f.message.contains(f.kind.as_str()) {
                let _ = writeln!(stderr, "error: {}", f.message);
            } else {
                let _ = writeln!(stderr, "error: {}: {}", f.kind, f.message);
            }
            Outcome {
                code: f.code,
                text: String::new(),
                json: json!({
                    "status": "error",
                    "kind": f.kind,
                    "message": f.message,
                }),
            }
        }
    };
    let body = match cli.format {
        Format::Text => outcome.text,
        Format::MachineReadable => {
            let mut doc = outcome.json;
            if let Json::Object(map) = &mut doc {
                map.insert("command".into(), json!(command));
                map.insert("exit_code".into(), json!(outcome.code));
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("json");
            s.push('\n');
            s
        }
    };
    if body.is_empty() {
        return outcome.code;
    }
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &body).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: IoError: {e}");
        return 2;
    }
    outcome.code
}

fn width_from_env() -> Result<Width, Failure> {
    match std::env::var(WIDTH_ENV) {
        Err(_) => Ok(Width::new(DEFAULT_WIDTH).expect("default width")),
        Ok(raw) => raw
            .trim()
            .parse::<u32>()
            .ok()
            .and_then(|bits| Width::new(bits).ok())
            .ok_or_else(|| Failure::usage("UsageError", format!("{WIDTH_ENV}={raw} is not a width in 1..=64"))),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage("IoError", format!("{}: {e}", path.display())))
}

fn load_design(path: &Path) -> Result<CcdfgDocument, Failure> {
    let bytes = read(path)?;
    textio::parse_ccdfg_bytes(&bytes).map_err(|e| Failure::usage(e.kind(), format!("{}: {e}", path.display())))
}

fn load_sequential(path: &Path) -> Result<Ccdfg, Failure> {
    match load_design(path)?.design {
        Design::Sequential(c) => Ok(c),
        Design::Pipelined(_) => Err(Failure::usage(
            "UsageError",
            format!("{}: expected a sequential design", path.display()),
        )),
    }
}

fn diagnostics_json(ds: &[Diagnostic]) -> Json {
    Json::Array(
        ds.iter()
            .map(|d| {
                json!({
                    "rule": d.rule.id(),
                    "step": d.step.as_ref().map(|s| s.as_str()),
                    "message": d.message,
                })
            })
            .collect(),
    )
}

fn cmd_validate(a: &ValidateArgs) -> Result<Outcome, Failure> {
    let doc = load_design(&a.input)?;
    let diagnostics = match &doc.design {
        Design::Sequential(c) => validate_pipelinable(c),
        Design::Pipelined(p) => validate_pipelined(p),
    };
    let mut text = String::new();
    for d in &diagnostics {
        let _ = writeln!(text, "{d}");
    }
    if diagnostics.is_empty() {
        text.push_str("valid\n");
    }
    Ok(Outcome {
        code: i32::from(!diagnostics.is_empty()),
        text,
        json: json!({
            "status": if diagnostics.is_empty() { "ok" } else { "invalid" },
            "valid": diagnostics.is_empty(),
            "diagnostics": diagnostics_json(&diagnostics),
        }),
    })
}

fn zero_state(c: &Ccdfg, mem_size: u64, width: Width) -> CcdfgState {
    let space = StateSpace::live_ins(c, mem_size, width);
    let mut s = CcdfgState::new(width);
    for v in space.vars {
        s.set(v, width.wrap(0));
    }
    for a in 0..mem_size {
        s.memory.insert(a, width.wrap(0));
    }
    for p in space.pointers {
        s.pointers.insert(p, 0);
    }
    s
}

fn cmd_run(a: &RunArgs, width: Width) -> Result<Outcome, Failure> {
    let doc = load_design(&a.input)?;
    let regions = doc.regions();
    let init = match &a.state {
        Some(path) => {
            let bytes = read(path)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| Failure::usage("SyntaxError", format!("{}: not UTF-8", path.display())))?;
            textio::parse_state_with_width(&text, width)
                .map_err(|e| Failure::usage(e.kind(), format!("{}: {e}", path.display())))?
        }
        None => zero_state(&regions, a.mem_size, width),
    };
    let prev = match &a.prev {
        Some(p) => Some(BlockLabel::new(p.as_str()).map_err(|e| Failure::usage("UsageError", e.to_string()))?),
        None => doc.start_label(),
    };
    let iterations = doc.body_iterations(a.iterations).map_err(|e| match e {
        RunCountError::BadMeta { .. } => Failure::usage("SemanticError", e.to_string()),
        RunCountError::TooFew { .. } => Failure::usage("UsageError", e.to_string()),
    })?;
    let mut interp = if a.trace {
        Interpreter::with_trace()
    } else {
        Interpreter::new()
    };
    let mut state = init.clone();
    interp
        .run_ccdfg(
            &regions.pre,
            &regions.body,
            &regions.post,
            iterations,
            &mut state,
            prev.as_ref(),
        )
        .map_err(|e| Failure::domain(e.kind(), e.to_string()))?;
    let records: Vec<String> = interp
        .take_trace()
        .map(|t| t.records(&init).iter().map(|r| r.to_string()).collect())
        .unwrap_or_default();
    let state = equiv::in_order(&state);
    let mut text = String::new();
    for r in &records {
        let _ = writeln!(text, "{r}");
    }
    let _ = writeln!(text, "cycles={}", interp.cycles());
    text.push_str(&textio::serialize_state(&state));
    let mut json = json!({
        "status": "ok",
        "cycles": interp.cycles(),
        "state": state,
    });
    if a.trace {
        json["trace"] = json!(records);
    }
    Ok(Outcome { code: 0, text, json })
}

fn synthesis_failure(e: &synth::SynthesisError) -> Failure {
    Failure::domain(e.kind(), e.to_string())
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<Outcome, Failure> {
    let c = load_sequential(&a.input)?;
    let interval = a.interval as usize;
    let out = synth::pipeline(&c, interval).map_err(|e| synthesis_failure(&e))?;
    let doc = out.document();
    let shadows: Vec<&str> = out.shadows.iter().map(|s| s.as_str()).collect();
    let text = textio::serialize_ccdfg(&doc);
    Ok(Outcome {
        code: 0,
        json: json!({
            "status": "ok",
            "params": out.params,
            "shadows": shadows,
            "supersteps": out.origins,
            "document": text,
        }),
        text,
    })
}

fn cmd_check(a: &CheckArgs, kind: CheckKind, width: Width) -> Result<Outcome, Failure> {
    let c = load_sequential(&a.input)?;
    let mut out = synth::pipeline(&c, a.interval as usize)
        .map_err(|e| Failure::domain(e.kind(), format!("pipeline not generated; nothing to check ({e})")))?;
    if let Some(path) = &a.pipelined_input {
        match load_design(path)?.design {
            Design::Pipelined(p) => out.pipelined = p,
            Design::Sequential(_) => {
                return Err(Failure::usage(
                    "UsageError",
                    format!("{}: expected a pipelined design", path.display()),
                ))
            }
        }
    }
    let cfg = SweepConfig {
        k_max: a.kmax,
        samples: a.samples as usize,
        seed: a.seed,
        mem_size: a.mem_size,
        width,
    };
    let reports = equiv::sweep(&Subject::from_output(&out), kind, &cfg, &CheckOptions::default())
        .map_err(|e| Failure::domain(e.kind(), e.to_string()))?;
    Ok(render_check(kind, &out.params, &cfg, &reports))
}

fn render_check(
    kind: CheckKind,
    params: &synth::PipelineParams,
    cfg: &SweepConfig,
    reports: &[CheckReport],
) -> Outcome {
    let passed = reports.iter().filter(|r| r.passed).count();
    let first_failure = reports.iter().find(|r| !r.passed);
    let mut text = format!(
        "check={kind} interval={} m={} kmax={} samples={} seed={}\n",
        params.interval, params.m, cfg.k_max, cfg.samples, cfg.seed
    );
    let mut matrix = Vec::new();
    for row in reports.chunks(cfg.samples.max(1)) {
        let marks: String = row.iter().map(|r| if r.passed { '.' } else { 'F' }).collect();
        let _ = writeln!(text, "k={:<3} {marks}", row[0].k);
        matrix.push(row.iter().map(|r| r.passed).collect::<Vec<_>>());
    }
    let all = first_failure.is_none();
    let _ = writeln!(
        text,
        "result={} ({passed}/{})",
        if all { "PASS" } else { "FAIL" },
        reports.len()
    );
    if let Some(r) = first_failure {
        let _ = writeln!(text, "first failure: {}", r.line());
        if let (Some(l), Some(rs)) = (&r.lhs_state, &r.rhs_state) {
            let _ = write!(text, "pipelined:\n{}", textio::serialize_state(l));
            let _ = write!(text, "sequential:\n{}", textio::serialize_state(rs));
        }
    }
    Outcome {
        code: i32::from(!all),
        text,
        json: json!({
            "status": if all { "ok" } else { "failed" },
            "check": kind,
            "params": params,
            "kmax": cfg.k_max,
            "samples": cfg.samples,
            "seed": cfg.seed,
            "passed": all,
            "passed_count": passed,
            "total": reports.len(),
            "matrix": matrix,
            "first_failure": first_failure,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&["ccdfg"]).0, 2);
        assert_eq!(run_args(&["ccdfg", "pipeline", "x.ccdfg", "--interval", "0"]).0, 2);
        assert_eq!(run_args(&["ccdfg", "run", "x.ccdfg"]).0, 2);
        assert_eq!(run_args(&["ccdfg", "validate", "/nonexistent/x.ccdfg"]).0, 2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["ccdfg", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("check-invariant"));
    }
}
