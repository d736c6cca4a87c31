//! Seven-stage orchestration with a per-stage trace.
//!
//! Only the Safety Gate can block. Linter and verifier findings are attached
//! to their records and never change control flow; a failed stage (bad
//! input, backend error, unmappable field) skips everything after it.

mod audit;

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::compiler::{compile, DeviceConfig};
use crate::context::{ContextStore, NetworkContext};
use crate::findings::Finding;
use crate::intent::{self, AgentClient, ClauseAst, ResolvedIntent};
use crate::ir::{decode_policy, policy_to_value, validate_policy, DecodeError, IrPolicy};
use crate::json::{canonical_string, sha256_hex};
use crate::validators::{lint_general, lint_panos, safety_gate};
use crate::verifier::{synth_header, verify};

pub use audit::{AuditLog, AuditRecord};

/// Stage outputs larger than this are replaced by their digest.
pub const OUTPUT_CAP_BYTES: usize = 256 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Resolver,
    IrBuilder,
    LintGeneral,
    LintPanos,
    SafetyGate,
    Compiler,
    Verifier,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Resolver,
        Stage::IrBuilder,
        Stage::LintGeneral,
        Stage::LintPanos,
        Stage::SafetyGate,
        Stage::Compiler,
        Stage::Verifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Resolver => "resolver",
            Stage::IrBuilder => "ir_builder",
            Stage::LintGeneral => "lint_general",
            Stage::LintPanos => "lint_panos",
            Stage::SafetyGate => "safety_gate",
            Stage::Compiler => "compiler",
            Stage::Verifier => "verifier",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Warned,
    Blocked,
    Skipped,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Warned => "warned",
            Status::Blocked => "blocked",
            Status::Skipped => "skipped",
            Status::Failed => "failed",
        }
    }

    fn from_findings(findings: &[Finding]) -> Status {
        if findings.is_empty() {
            Status::Ok
        } else {
            Status::Warned
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: Status,
    /// SHA-256 of the canonical stage input; empty when skipped.
    pub input_digest: String,
    pub output: Value,
    pub findings: Vec<Finding>,
    pub duration_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub request_id: String,
    pub context_id: String,
    pub query: String,
    pub backend: Backend,
    pub stages: Vec<StageRecord>,
    #[serde(rename = "final")]
    pub final_config: Option<DeviceConfig>,
}

/// Overall result, used for exit codes and audit lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Warned,
    Blocked,
    Failed,
}

impl PipelineTrace {
    pub fn record(&self, stage: Stage) -> &StageRecord {
        self.stages.iter().find(|r| r.stage == stage).expect("trace holds every stage")
    }

    pub fn status(&self, stage: Stage) -> Status {
        self.record(stage).status
    }

    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.stages.iter().flat_map(|r| r.findings.iter())
    }

    pub fn outcome(&self) -> Outcome {
        let has = |s: Status| self.stages.iter().any(|r| r.status == s);
        if has(Status::Blocked) {
            Outcome::Blocked
        } else if has(Status::Failed) {
            Outcome::Failed
        } else if has(Status::Warned) {
            Outcome::Warned
        } else {
            Outcome::Ok
        }
    }

    /// The IR produced by the builder stage, if it got that far.
    pub fn ir(&self) -> Option<IrPolicy> {
        let rec = self.record(Stage::IrBuilder);
        if matches!(rec.status, Status::Ok | Status::Warned) {
            crate::ir::policy_from_value(&rec.output).ok()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Deterministic controlled-grammar parser and resolver.
    #[default]
    Reference,
    /// External agents for both the resolver and builder roles.
    Agent,
    /// The query is an IR document; resolution is bypassed.
    Ir,
}

impl Backend {
    pub fn parse(text: &str) -> Option<Backend> {
        match text {
            "reference" => Some(Backend::Reference),
            "agent" => Some(Backend::Agent),
            "ir" => Some(Backend::Ir),
            _ => None,
        }
    }
}

#[derive(Clone, Default)]
pub struct RunOptions {
    pub backend: Backend,
    pub agent: Option<Arc<dyn AgentClient>>,
}

impl fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunOptions").field("backend", &self.backend).field("agent", &self.agent.is_some()).finish()
    }
}

fn capped(output: Value) -> Value {
    let text = canonical_string(&output);
    if text.len() <= OUTPUT_CAP_BYTES {
        return output;
    }
    json!({ "truncated": true, "bytes": text.len(), "digest": sha256_hex(text.as_bytes()) })
}

struct Runner {
    stages: Vec<StageRecord>,
    halted: bool,
}

impl Runner {
    /// Runs `f` unless an earlier stage halted. `f` returns (status, output, findings).
    fn stage(&mut self, stage: Stage, input: &Value, f: impl FnOnce() -> (Status, Value, Vec<Finding>)) {
        if self.halted {
            self.stages.push(StageRecord {
                stage,
                status: Status::Skipped,
                input_digest: String::new(),
                output: Value::Null,
                findings: Vec::new(),
                duration_ms: 0.0,
            });
            return;
        }
        let t = Instant::now();
        let input_digest = sha256_hex(canonical_string(input).as_bytes());
        let (status, output, findings) = f();
        self.halted = matches!(status, Status::Blocked | Status::Failed);
        log::debug!("stage {} -> {} ({} findings)", stage.as_str(), status, findings.len());
        self.stages.push(StageRecord {
            stage,
            status,
            input_digest,
            output: capped(output),
            findings,
            duration_ms: t.elapsed().as_secs_f64() * 1000.0,
        });
    }
}

enum Front {
    Intent(ResolvedIntent),
    Passthrough,
}

fn parse_finding(e: &intent::ParseError) -> Finding {
    let f = Finding::new("INTENT_PARSE", format!("{e}; rephrase the request using the controlled grammar"));
    match &e.token {
        Some(t) => f.with_subject(t.clone()),
        None => f,
    }
}

fn ast_value(clauses: &[ClauseAst]) -> Value {
    serde_json::to_value(clauses).expect("clause ASTs serialize")
}

fn unresolved_findings(intent: &ResolvedIntent) -> Vec<Finding> {
    let mut out = Vec::new();
    for (i, c) in intent.clauses.iter().enumerate() {
        for (k, phrase) in c.unresolved.iter().enumerate() {
            let note = c.notes.get(k).map(String::as_str).unwrap_or("unresolved");
            out.push(
                Finding::new("INTENT_UNRESOLVED", note.to_string()).for_rule(format!("R{}", i + 1)).with_subject(phrase.clone()),
            );
        }
    }
    out
}

fn decode_findings(e: &DecodeError) -> Vec<Finding> {
    match e {
        DecodeError::Syntax(s) => vec![Finding::new("SCHEMA_DECODE", s.to_string())],
        DecodeError::Schema(fields) => fields
            .iter()
            .map(|f| Finding::new("SCHEMA_DECODE", f.to_string()).with_subject(f.path.clone()))
            .collect(),
    }
}

fn agent_or_fail(opts: &RunOptions) -> Result<Arc<dyn AgentClient>, Vec<Finding>> {
    opts.agent
        .clone()
        .ok_or_else(|| vec![Finding::new("AGENT_UNCONFIGURED", "agent backend selected but no agent endpoint is configured")])
}

/// Runs every stage against an already loaded context.
pub fn run_with_context(ctx: &NetworkContext, query: &str, opts: &RunOptions) -> PipelineTrace {
    let mut run = Runner { stages: Vec::new(), halted: false };
    let mut front = None;
    let mut policy: Option<IrPolicy> = None;
    let mut config: Option<DeviceConfig> = None;

    let input = json!({ "query": query, "context_id": ctx.id, "backend": opts.backend });
    run.stage(Stage::Resolver, &input, || match opts.backend {
        Backend::Reference => match intent::parse_controlled(query) {
            Err(e) => (Status::Failed, json!({ "error": e }), vec![parse_finding(&e)]),
            Ok(clauses) => {
                let resolved = intent::resolve(&clauses, ctx);
                let findings = unresolved_findings(&resolved);
                let out = json!({ "clauses": ast_value(&clauses), "intent": intent::intent_to_value(&resolved) });
                front = Some(Front::Intent(resolved));
                (Status::from_findings(&findings), out, findings)
            }
        },
        Backend::Agent => match agent_or_fail(opts).and_then(|a| intent::agent_resolve(a.as_ref(), query, ctx)) {
            Err(f) => (Status::Failed, Value::Null, f),
            Ok(resolved) => {
                let findings = unresolved_findings(&resolved);
                let out = json!({ "intent": intent::intent_to_value(&resolved) });
                front = Some(Front::Intent(resolved));
                (Status::from_findings(&findings), out, findings)
            }
        },
        Backend::Ir => {
            front = Some(Front::Passthrough);
            (Status::Ok, json!({ "passthrough": true }), Vec::new())
        }
    });

    let input = match &front {
        Some(Front::Intent(i)) => intent::intent_to_value(i),
        _ => json!({ "document": query }),
    };
    run.stage(Stage::IrBuilder, &input, || {
        let built = match (&front, opts.backend) {
            (Some(Front::Intent(i)), Backend::Agent) => {
                agent_or_fail(opts).and_then(|a| intent::agent_build(a.as_ref(), i, ctx))
            }
            (Some(Front::Intent(i)), _) => intent::build_ir(i, ctx).map_err(|f| vec![f]),
            _ => decode_policy(query.as_bytes()).map_err(|e| decode_findings(&e)),
        };
        match built {
            Err(f) => (Status::Failed, Value::Null, f),
            Ok(p) => {
                let findings = validate_policy(&p);
                let out = policy_to_value(&p);
                policy = Some(p);
                (Status::from_findings(&findings), out, findings)
            }
        }
    });

    let ir_doc = policy.as_ref().map(policy_to_value).unwrap_or(Value::Null);
    run.stage(Stage::LintGeneral, &ir_doc, || {
        let f = lint_general(policy.as_ref().expect("builder produced a policy"));
        (Status::from_findings(&f), json!({ "codes": f.iter().map(|x| &x.code).collect::<Vec<_>>() }), f)
    });
    run.stage(Stage::LintPanos, &ir_doc, || {
        let f = lint_panos(policy.as_ref().expect("builder produced a policy"), ctx);
        (Status::from_findings(&f), json!({ "codes": f.iter().map(|x| &x.code).collect::<Vec<_>>() }), f)
    });
    run.stage(Stage::SafetyGate, &ir_doc, || {
        let g = safety_gate(policy.as_ref().expect("builder produced a policy"));
        let status = if g.safe { Status::Ok } else { Status::Blocked };
        (status, json!({ "safe": g.safe }), g.errors)
    });
    run.stage(Stage::Compiler, &ir_doc, || match compile(policy.as_ref().expect("gate passed a policy"), ctx) {
        Err(e) => (Status::Failed, json!({ "error": e }), vec![e.finding()]),
        Ok(cfg) => {
            let out = json!({
                "lines": cfg.lines,
                "text": cfg.to_text(),
                "emitted_objects": cfg.emitted_objects,
                "rule_order": cfg.rule_order,
            });
            config = Some(cfg);
            (Status::Ok, out, Vec::new())
        }
    });
    let cfg_doc = config.as_ref().map(|c| json!(c.lines)).unwrap_or(Value::Null);
    run.stage(Stage::Verifier, &cfg_doc, || {
        let cfg = config.as_ref().expect("compiler produced a config");
        let header = synth_header(ctx);
        let f = verify(&cfg.lines, &header);
        (Status::from_findings(&f), json!({ "header": header }), f)
    });

    PipelineTrace {
        request_id: uuid::Uuid::new_v4().to_string(),
        context_id: ctx.id.clone(),
        query: query.to_string(),
        backend: opts.backend,
        stages: run.stages,
        final_config: config,
    }
}

/// Loads `context_id` from the store and runs the pipeline. A missing
/// context fails the resolver stage.
pub fn run_pipeline(store: &ContextStore, context_id: &str, query: &str, opts: &RunOptions) -> PipelineTrace {
    match store.get(context_id) {
        Ok(ctx) => run_with_context(&ctx, query, opts),
        Err(e) => {
            let mut run = Runner { stages: Vec::new(), halted: false };
            let input = json!({ "query": query, "context_id": context_id, "backend": opts.backend });
            let finding = Finding::new(e.code(), e.to_string()).with_subject(context_id.to_string());
            run.stage(Stage::Resolver, &input, || (Status::Failed, Value::Null, vec![finding]));
            for stage in &Stage::ALL[1..] {
                run.stage(*stage, &Value::Null, || unreachable!("halted pipeline runs no stage"));
            }
            PipelineTrace {
                request_id: uuid::Uuid::new_v4().to_string(),
                context_id: context_id.to_string(),
                query: query.to_string(),
                backend: opts.backend,
                stages: run.stages,
                final_config: None,
            }
        }
    }
}
