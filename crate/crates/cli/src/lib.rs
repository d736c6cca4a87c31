//! `nlfw` command line and HTTP service.

pub mod server;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nlfw_core::context::{load_context, ContextStore, NetworkContext};
use nlfw_core::eval::{load_triplets, run_suite_on};
use nlfw_core::findings::catalog_document;
use nlfw_core::fixtures::all_contexts;
use nlfw_core::intent::{AgentClient, HttpAgent};
use nlfw_core::pipeline::{run_pipeline, AuditLog, Backend, Outcome, PipelineTrace, RunOptions};
use nlfw_core::Finding;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BLOCKED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "nlfw", version, about = "Compile natural-language firewall requests into PAN-OS configuration")]
pub struct Cli {
    /// Directory holding stored network contexts.
    #[arg(long, env = "NLFW_STORE", default_value = ".nlfw/contexts", global = true)]
    pub store: PathBuf,
    /// JSON-lines audit file; one record per pipeline run.
    #[arg(long, env = "NLFW_AUDIT", default_value = ".nlfw/audit.jsonl", global = true)]
    pub audit: PathBuf,
    /// Endpoint for the agent backend.
    #[arg(long, env = "NLFW_AGENT_URL", global = true)]
    pub agent_url: Option<String>,
    /// Agent request timeout in seconds.
    #[arg(long, env = "NLFW_AGENT_TIMEOUT", default_value_t = 30, global = true)]
    pub agent_timeout: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manage stored contexts.
    Context {
        #[command(subcommand)]
        action: ContextCmd,
    },
    /// Run one request through the pipeline.
    Run {
        #[arg(long)]
        context: String,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value_t = BackendArg::Reference)]
        backend: BackendArg,
        /// Write the full trace document here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score a triplet corpus.
    Eval {
        #[arg(long)]
        triplets: PathBuf,
        /// Write the report document here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
    /// Print the finding code catalog.
    Catalog {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ContextCmd {
    /// Validate and store a context document ("-" reads stdin).
    Add { file: PathBuf },
    /// List stored contexts.
    List,
    /// Print a stored context.
    Show { id: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Reference,
    Agent,
    Ir,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Reference => Backend::Reference,
            BackendArg::Agent => Backend::Agent,
            BackendArg::Ir => Backend::Ir,
        }
    }
}

pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Ok | Outcome::Warned => EXIT_OK,
        Outcome::Blocked => EXIT_BLOCKED,
        Outcome::Failed => EXIT_FAILED,
    }
}

pub fn format_finding(f: &Finding) -> String {
    let sev = if f.is_error() { "error" } else { "warning" };
    let mut s = format!("{sev} {}", f.code);
    if let Some(r) = &f.rule_id {
        s.push_str(&format!(" [{r}]"));
    }
    if let Some(l) = f.line {
        s.push_str(&format!(" line {l}"));
    }
    s.push_str(": ");
    s.push_str(&f.message);
    if let Some(sub) = &f.subject {
        s.push_str(&format!(" ({sub})"));
    }
    s
}

pub fn agent_client(url: Option<&str>, timeout_secs: u64) -> Option<Arc<dyn AgentClient>> {
    url.map(|u| Arc::new(HttpAgent::new(u, Duration::from_secs(timeout_secs))) as Arc<dyn AgentClient>)
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn open_store(cli: &Cli) -> Result<ContextStore> {
    ContextStore::open(&cli.store).with_context(|| format!("opening context store {}", cli.store.display()))
}

fn context_cmd(cli: &Cli, action: &ContextCmd) -> Result<i32> {
    let store = open_store(cli)?;
    match action {
        ContextCmd::Add { file } => match load_context(&read_input(file)?) {
            Ok(ctx) => {
                let id = store.save(&ctx).map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))?;
                println!("{id}");
                Ok(EXIT_OK)
            }
            Err(e) => {
                for f in e.findings() {
                    eprintln!("{}", format_finding(&f));
                }
                Ok(EXIT_FAILED)
            }
        },
        ContextCmd::List => {
            for s in store.list().map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))? {
                println!(
                    "{}\t{}\tobjects={} zones={} services={} schedules={}",
                    s.id, s.title, s.objects, s.zones, s.services, s.schedules
                );
            }
            Ok(EXIT_OK)
        }
        ContextCmd::Show { id } => match store.get(id) {
            Ok(ctx) => {
                println!("{}", nlfw_core::context::encode_context(&ctx));
                Ok(EXIT_OK)
            }
            Err(e) => {
                eprintln!("error {}: {e}", e.code());
                Ok(EXIT_FAILED)
            }
        },
    }
}

fn append_audit(path: &Path, trace: &PipelineTrace) {
    if let Err(e) = AuditLog::open(path).and_then(|log| log.append(trace)) {
        log::warn!("audit log {} not written: {e}", path.display());
    }
}

fn run_cmd(cli: &Cli, context: &str, query: &str, backend: BackendArg, trace_out: Option<&Path>) -> Result<i32> {
    let store = open_store(cli)?;
    let opts = RunOptions { backend: backend.into(), agent: agent_client(cli.agent_url.as_deref(), cli.agent_timeout) };
    let trace = run_pipeline(&store, context, query, &opts);
    append_audit(&cli.audit, &trace);
    if let Some(p) = trace_out {
        std::fs::write(p, serde_json::to_string_pretty(&trace)?).with_context(|| format!("writing {}", p.display()))?;
    }
    for rec in &trace.stages {
        for f in &rec.findings {
            eprintln!("{}: {}", rec.stage.as_str(), format_finding(f));
        }
    }
    if let Some(cfg) = &trace.final_config {
        print!("{}", cfg.to_text());
    }
    let outcome = trace.outcome();
    eprintln!("outcome: {}", serde_json::to_value(outcome)?.as_str().unwrap_or_default());
    Ok(exit_code(outcome))
}

/// Bundled fixture contexts, overridden by any stored context with the same id.
fn eval_contexts(store: &ContextStore) -> Result<Vec<NetworkContext>> {
    let mut ctxs = all_contexts();
    for s in store.list().map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))? {
        let ctx = store.get(&s.id).map_err(|e| anyhow::anyhow!("{}: {e}", e.code()))?;
        ctxs.retain(|c| c.id != ctx.id);
        ctxs.push(ctx);
    }
    Ok(ctxs)
}

fn eval_cmd(cli: &Cli, triplets: &Path, report_out: Option<&Path>) -> Result<i32> {
    let set = load_triplets(triplets).with_context(|| format!("reading {}", triplets.display()))?;
    for f in &set.findings {
        eprintln!("{}", format_finding(f));
    }
    let ctxs = eval_contexts(&open_store(cli)?)?;
    let report = run_suite_on(&ctxs, &set.cases, &RunOptions::default());
    print!("{}", report.to_table());
    for c in report.cases.iter().filter(|c| !c.passed) {
        if let Some(e) = &c.error {
            eprintln!("{}: {}", c.id, format_finding(e));
        }
        for d in [&c.ir_diff, &c.cli_diff].into_iter().flatten() {
            eprintln!("--- {} ---\n{d}", c.id);
        }
    }
    if let Some(p) = report_out {
        std::fs::write(p, report.to_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    let ok = set.findings.is_empty() && report.total > 0 && report.pass_rate == 1.0;
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn catalog_cmd(out: Option<&Path>) -> Result<i32> {
    let mut text = serde_json::to_string_pretty(&catalog_document())?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn serve_cmd(cli: &Cli, bind: &str, port: u16) -> Result<i32> {
    let store = open_store(cli)?;
    let audit = AuditLog::open(&cli.audit).with_context(|| format!("opening audit log {}", cli.audit.display()))?;
    let state = server::AppState::new(store, Some(audit), agent_client(cli.agent_url.as_deref(), cli.agent_timeout));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((bind, port)).await.with_context(|| format!("binding {bind}:{port}"))?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, server::router(state)).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(EXIT_OK)
}

pub fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Context { action } => context_cmd(cli, action),
        Command::Run { context, query, backend, trace } => run_cmd(cli, context, query, *backend, trace.as_deref()),
        Command::Eval { triplets, report } => eval_cmd(cli, triplets, report.as_deref()),
        Command::Serve { port, bind } => serve_cmd(cli, bind, *port),
        Command::Catalog { out } => catalog_cmd(out.as_deref()),
    }
}

/// Parses `argv` and runs the command, returning the process exit status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILED
        }
    }
}
