//! Runs a triplet corpus through the pipeline and scores each case.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use similar::TextDiff;

use super::similarity::similarity;
use super::triplet::Triplet;
use crate::context::{ContextStore, NetworkContext};
use crate::findings::Finding;
use crate::ir::{canonicalize, encode_policy_pretty, IrPolicy};
use crate::json::sha256_hex;
use crate::pipeline::{run_with_context, Outcome, RunOptions};

/// Equality after canonicalization; policies that do not canonicalize are never equal.
pub fn ir_equal(a: &IrPolicy, b: &IrPolicy) -> bool {
    match (canonicalize(a), canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn canonical_text(p: &IrPolicy) -> String {
    canonicalize(p).map_or_else(|_| encode_policy_pretty(p), |c| encode_policy_pretty(&c))
}

fn unified(expected: &str, actual: &str) -> Option<String> {
    (expected != actual).then(|| TextDiff::from_lines(expected, actual).unified_diff().header("expected", "actual").to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub context_id: String,
    pub expect_blocked: bool,
    pub blocked: bool,
    pub semantic_pass: bool,
    pub syntax_pass: bool,
    pub similarity: f64,
    pub passed: bool,
    /// Set when the case could not be run at all.
    pub error: Option<Finding>,
    /// SHA-256 over the ordered `stage:code:rule` triples of the trace.
    pub findings_digest: String,
    pub ir_diff: Option<String>,
    pub cli_diff: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: Vec<CaseReport>,
    pub total: usize,
    pub passed: usize,
    pub pass_rate: f64,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let width = self.cases.iter().map(|c| c.id.len()).max().unwrap_or(2).max(2);
        let mut out = format!("{:<width$}  {:<13}  sem  syn  similarity  result\n", "id", "context");
        for c in &self.cases {
            let mark = |b: bool| if b { "ok " } else { "-- " };
            let _ = writeln!(
                out,
                "{:<width$}  {:<13}  {}  {}  {:>10.4}  {}",
                c.id,
                c.context_id,
                mark(c.semantic_pass),
                mark(c.syntax_pass),
                c.similarity,
                if c.passed { "PASS" } else { "FAIL" },
            );
        }
        let _ = writeln!(out, "{}/{} passed ({:.1}%)", self.passed, self.total, self.pass_rate * 100.0);
        out
    }
}

fn errored(t: &Triplet, f: Finding) -> CaseReport {
    CaseReport {
        id: t.id.clone(),
        context_id: t.context_id.clone(),
        expect_blocked: t.expect_blocked,
        blocked: false,
        semantic_pass: false,
        syntax_pass: false,
        similarity: 0.0,
        passed: false,
        error: Some(f),
        findings_digest: String::new(),
        ir_diff: None,
        cli_diff: None,
    }
}

fn run_case(t: &Triplet, ctx: &NetworkContext, opts: &RunOptions) -> CaseReport {
    let trace = run_with_context(ctx, &t.query, opts);
    let blocked = trace.outcome() == Outcome::Blocked;
    let mut keyed = String::new();
    for rec in &trace.stages {
        for f in &rec.findings {
            let _ = writeln!(keyed, "{}:{}:{}", rec.stage.as_str(), f.code, f.rule_id.as_deref().unwrap_or(""));
        }
    }
    let actual_ir = trace.ir();
    let semantic_pass = actual_ir.as_ref().is_some_and(|a| ir_equal(&t.expected_ir, a));
    let ir_diff = if semantic_pass {
        None
    } else {
        let actual = actual_ir.as_ref().map_or_else(String::new, canonical_text);
        unified(&canonical_text(&t.expected_ir), &actual)
    };
    let actual_cli = trace.final_config.as_ref().map_or_else(String::new, |c| c.to_text());
    let sim = similarity(&t.expected_cli, &actual_cli);
    let syntax_pass = sim == 1.0;
    CaseReport {
        id: t.id.clone(),
        context_id: t.context_id.clone(),
        expect_blocked: t.expect_blocked,
        blocked,
        semantic_pass,
        syntax_pass,
        similarity: sim,
        passed: semantic_pass && syntax_pass && blocked == t.expect_blocked,
        error: None,
        findings_digest: sha256_hex(keyed.as_bytes()),
        ir_diff,
        cli_diff: unified(&t.expected_cli, &actual_cli),
    }
}

fn summarize(mut cases: Vec<CaseReport>) -> SuiteReport {
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let total = cases.len();
    let passed = cases.iter().filter(|c| c.passed).count();
    let pass_rate = if total == 0 { 0.0 } else { passed as f64 / total as f64 };
    SuiteReport { cases, total, passed, pass_rate }
}

/// Runs against in-memory contexts, matched by id.
pub fn run_suite_on(contexts: &[NetworkContext], triplets: &[Triplet], opts: &RunOptions) -> SuiteReport {
    let by_id: BTreeMap<&str, &NetworkContext> = contexts.iter().map(|c| (c.id.as_str(), c)).collect();
    summarize(
        triplets
            .iter()
            .map(|t| match by_id.get(t.context_id.as_str()) {
                Some(ctx) => run_case(t, ctx, opts),
                None => errored(t, unknown_context(t)),
            })
            .collect(),
    )
}

fn unknown_context(t: &Triplet) -> Finding {
    Finding::new("TPL_UNKNOWN_CONTEXT", format!("case {} references context {:?}", t.id, t.context_id)).with_subject(t.id.clone())
}

/// Runs against a context store, loading each referenced context once.
pub fn run_suite(store: &ContextStore, triplets: &[Triplet], opts: &RunOptions) -> SuiteReport {
    let mut cache: BTreeMap<String, Option<NetworkContext>> = BTreeMap::new();
    let mut cases = Vec::with_capacity(triplets.len());
    for t in triplets {
        let ctx = cache.entry(t.context_id.clone()).or_insert_with(|| store.get(&t.context_id).ok());
        cases.push(match ctx {
            Some(ctx) => run_case(t, ctx, opts),
            None => errored(t, unknown_context(t)),
        });
    }
    summarize(cases)
}
