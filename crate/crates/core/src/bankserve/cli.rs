//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::genai::{FaultBehavior, PromptSpec};
use crate::qmodel::{instantiate_template, Difficulty, DistractorStrategy, QuestionTemplate};
use crate::validator::{validate, Disposition, LoopError, Uniqueness};

use super::audit::{AuditLog, AuditSink};
use super::config::{BackendKind, Config};
use super::service::{load_questions, Engine, EngineError, GenerateRequest};
use super::store::{export_csv, Bank, Decision, RecordStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mcqgen", version, about = "Generate, validate and curate multiple-choice STEM questions")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Audit log (JSON lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub audit: Option<PathBuf>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate validated questions and append the accepted ones to the bank.
    Generate(GenerateArgs),
    /// Validate questions from a file and write reports.
    Validate(ValidateArgs),
    /// Parameterized question templates.
    #[command(subcommand)]
    Template(TemplateCommand),
    /// Inspect and curate the question bank.
    #[command(subcommand)]
    Bank(BankCommand),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "trigonometric identities")]
    pub topic: String,
    #[arg(long, default_value_t = 3)]
    pub count: u32,
    #[arg(long, value_enum, default_value_t = DifficultyArg::Medium)]
    pub difficulty: DifficultyArg,
    /// Comma-separated function constraints; `none` for no constraint.
    #[arg(long, default_value = "sine,cosine,cotangent")]
    pub functions: String,
    /// Comma-separated distractor strategies.
    #[arg(long, default_value = "sign-inversion,incorrect-identity,evaluation-method-error")]
    pub strategies: String,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mock behaviours per call, e.g. `duplicate_key_option,ok` or `rate_limit*2,ok`.
    #[arg(long, value_name = "SCRIPT")]
    pub fault_script: Option<String>,
    /// Bank file to append accepted records to.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Additional prompt clause (repeatable).
    #[arg(long = "clause", value_name = "TEXT")]
    pub clauses: Vec<String>,
    /// Leave the uniqueness clause out of the first prompt.
    #[arg(long)]
    pub no_uniqueness_clause: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Questions as JSON, a response payload, or a bank file.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Where to write the reports; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TemplateCommand {
    /// Draw instances of a template (JSON or TOML).
    Instantiate {
        #[arg(long, value_name = "PATH")]
        template: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u32,
        /// Append instances to this bank file as candidates.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BankCommand {
    /// Print records.
    List {
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, value_enum)]
        status: Option<StatusArg>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Write records to a file or stdout.
    Export {
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long, value_enum)]
        status: Option<StatusArg>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Approve or reject a candidate.
    Decide {
        id: String,
        #[arg(value_enum)]
        decision: DecisionArg,
        #[arg(long)]
        note: Option<String>,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, value_name = "PATH")]
    pub bank: Option<PathBuf>,
    /// Static review UI directory served under /ui.
    #[arg(long, value_name = "PATH")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DifficultyArg {
    Low,
    Medium,
    High,
}

impl From<DifficultyArg> for Difficulty {
    fn from(d: DifficultyArg) -> Self {
        match d {
            DifficultyArg::Low => Difficulty::Low,
            DifficultyArg::Medium => Difficulty::Medium,
            DifficultyArg::High => Difficulty::High,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Mock,
    Http,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Http => BackendKind::Http,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatusArg {
    Candidate,
    Approved,
    Rejected,
}

impl From<StatusArg> for RecordStatus {
    fn from(s: StatusArg) -> Self {
        match s {
            StatusArg::Candidate => RecordStatus::Candidate,
            StatusArg::Approved => RecordStatus::Approved,
            StatusArg::Rejected => RecordStatus::Rejected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DecisionArg {
    Approve,
    Reject,
}

/// Parses `argv` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    let _ = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .try_init();
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    let config = Config::load(cli.config.as_deref()).map_err(usage)?;
    let audit_path = cli.audit.clone().unwrap_or_else(|| config.audit_path.clone());
    let open_audit = || -> Result<Arc<dyn AuditSink>, Failure> {
        Ok(Arc::new(AuditLog::open(&audit_path).map_err(|e| usage(format!("{}: {e}", audit_path.display())))?))
    };
    match cli.command {
        Command::Generate(args) => generate(args, config, open_audit()?),
        Command::Validate(args) => validate_file(args, config, open_audit()?),
        Command::Template(TemplateCommand::Instantiate { template, seed, count, out }) => {
            instantiate(&template, seed, count, out.as_deref(), &config)
        }
        Command::Bank(cmd) => bank(cmd, &config, open_audit),
        Command::Serve(args) => serve(args, config, open_audit()?),
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::to_string).collect()
}

fn generate(args: GenerateArgs, config: Config, audit: Arc<dyn AuditSink>) -> Result<i32, Failure> {
    let functions = split_list(&args.functions);
    let strategies = split_list(&args.strategies)
        .iter()
        .map(|s| s.parse::<DistractorStrategy>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let spec = PromptSpec {
        topic: args.topic,
        count: args.count,
        function_constraints: if functions.is_empty() || functions == ["none"] { None } else { Some(functions) },
        difficulty: args.difficulty.into(),
        distractor_strategies: strategies,
        uniqueness_clause: !args.no_uniqueness_clause,
        extra_clauses: args.clauses,
    };
    spec.validate().map_err(usage)?;
    let fault_script = match &args.fault_script {
        Some(s) => FaultBehavior::parse_script(s).map_err(usage)?,
        None => Vec::new(),
    };
    let bank_path = args.out.clone().unwrap_or_else(|| config.bank_path.clone());
    let (mut bank, _) = Bank::open(&bank_path).map_err(usage)?;
    let engine = Engine::new(config, audit);
    let req = GenerateRequest {
        spec,
        backend: args.backend.map(Into::into),
        seed: args.seed,
        fault_script,
        max_attempts: args.max_attempts,
    };
    let outcome = match engine.generate(&req) {
        Ok(o) => o,
        Err(EngineError::Loop(e @ LoopError::BackendExhausted { .. })) => {
            return Err(Failure {
                code: EXIT_BACKEND,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(usage(e)),
    };
    for r in &outcome.records {
        bank.put(r.clone()).map_err(usage)?;
    }
    write_output(None, &pretty(&outcome))?;
    let shortfall = outcome.batch.shortfall(req.spec.count);
    eprintln!(
        "accepted {} of {} question(s) in {} attempt(s); {} rejection(s); bank {}",
        outcome.records.len(),
        req.spec.count,
        outcome.batch.attempts_used,
        outcome.batch.rejected.len(),
        bank_path.display()
    );
    Ok(if shortfall > 0 { EXIT_REJECTIONS } else { EXIT_OK })
}

fn describe(report: &crate::validator::ValidationReport) -> String {
    let mut parts = Vec::new();
    match &report.uniqueness {
        Uniqueness::Unique => {}
        Uniqueness::DuplicateKey(ids) => parts.push(format!("option(s) {} equivalent to the key", ids.join(", "))),
        Uniqueness::NoCorrect => parts.push("no correct option".to_string()),
        Uniqueness::Inconclusive(ids) => parts.push(format!("option(s) {} inconclusive", ids.join(", "))),
    }
    parts.extend(report.structural_issues.iter().cloned());
    parts.extend(report.feedback_issues.iter().cloned());
    parts.join("; ")
}

fn validate_file(args: ValidateArgs, config: Config, audit: Arc<dyn AuditSink>) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| usage(format!("{}: {e}", args.input.display())))?;
    let engine = Engine::new(config, audit);
    let questions = match load_questions(&text) {
        Ok(qs) => qs,
        Err(e) => {
            eprintln!("{}: {}", args.input.display(), e);
            write_output(args.report.as_deref(), &pretty(&serde_json::json!({ "error": e })))?;
            return Ok(EXIT_REJECTIONS);
        }
    };
    let mut reports = Vec::new();
    let mut failed = 0;
    for q in &questions {
        let r = validate(q, &engine.config.loop_policy);
        engine.record_validation(q, &r);
        if r.disposition != Disposition::Accept {
            failed += 1;
            eprintln!("question {}: {}", q.id, describe(&r));
        }
        reports.push(r);
    }
    write_output(args.report.as_deref(), &pretty(&reports))?;
    eprintln!("{} question(s), {} not accepted", questions.len(), failed);
    Ok(if failed > 0 { EXIT_REJECTIONS } else { EXIT_OK })
}

fn read_template(path: &Path) -> Result<QuestionTemplate, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn instantiate(path: &Path, seed: u64, count: u32, out: Option<&Path>, config: &Config) -> Result<i32, Failure> {
    let template = read_template(path)?;
    let mut questions = Vec::new();
    let mut failed = 0;
    for k in 0..count as u64 {
        let q = instantiate_template(&template, seed.wrapping_add(k)).map_err(usage)?;
        let r = validate(&q, &config.loop_policy);
        if r.disposition != Disposition::Accept {
            failed += 1;
            eprintln!("instance seed {}: {}", seed.wrapping_add(k), describe(&r));
        }
        questions.push((q, r));
    }
    if let Some(p) = out {
        let (mut bank, _) = Bank::open(p).map_err(usage)?;
        for (q, r) in &questions {
            bank.put(super::store::BankRecord::candidate(q.clone(), r.clone())).map_err(usage)?;
        }
    }
    let qs: Vec<_> = questions.into_iter().map(|(q, _)| q).collect();
    write_output(None, &pretty(&qs))?;
    Ok(if failed > 0 { EXIT_REJECTIONS } else { EXIT_OK })
}

fn bank(
    cmd: BankCommand,
    config: &Config,
    open_audit: impl FnOnce() -> Result<Arc<dyn AuditSink>, Failure>,
) -> Result<i32, Failure> {
    let path_of = |p: Option<PathBuf>| p.unwrap_or_else(|| config.bank_path.clone());
    match cmd {
        BankCommand::List { bank, status, format } => {
            let (b, stats) = Bank::open(path_of(bank)).map_err(usage)?;
            if !stats.skipped.is_empty() {
                eprintln!("skipped {} unreadable line(s)", stats.skipped.len());
            }
            let recs = b.list(status.map(Into::into));
            let text = match format {
                FormatArg::Json => pretty(&recs),
                FormatArg::Csv => export_csv(recs),
            };
            write_output(None, &text)?;
            Ok(EXIT_OK)
        }
        BankCommand::Export { bank, status, format, out } => {
            let (b, _) = Bank::open(path_of(bank)).map_err(usage)?;
            let recs = b.list(status.map(Into::into));
            let text = match format {
                FormatArg::Json => pretty(&recs),
                FormatArg::Csv => export_csv(recs),
            };
            write_output(out.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        BankCommand::Decide { id, decision, note, bank } => {
            let (mut b, _) = Bank::open(path_of(bank)).map_err(usage)?;
            let d = match decision {
                DecisionArg::Approve => Decision::Approve,
                DecisionArg::Reject => Decision::Reject,
            };
            let audit = open_audit()?;
            let record = b.decide(&id, d, note).map_err(|e| Failure {
                code: EXIT_REJECTIONS,
                message: e.to_string(),
            })?;
            Engine::new(config.clone(), audit).record_decision(&record);
            write_output(None, &pretty(&record))?;
            Ok(EXIT_OK)
        }
    }
}

fn serve(args: ServeArgs, mut config: Config, audit: Arc<dyn AuditSink>) -> Result<i32, Failure> {
    if let Some(p) = args.port {
        config.port = p;
    }
    if let Some(b) = args.bank {
        config.bank_path = b;
    }
    if let Some(d) = args.ui_dir {
        config.ui_dir = Some(d);
    }
    let (bank, stats) = Bank::open(&config.bank_path).map_err(usage)?;
    if !stats.skipped.is_empty() {
        eprintln!("skipped {} unreadable bank line(s)", stats.skipped.len());
    }
    let port = config.port;
    let state = super::api::AppState::new(Engine::new(config, audit), bank);
    let rt = tokio::runtime::Runtime::new().map_err(usage)?;
    rt.block_on(super::api::serve(state, port)).map_err(usage)?;
    Ok(EXIT_OK)
}
