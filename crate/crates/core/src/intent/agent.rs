//! External schema-constrained agents for the resolver and builder roles.
//!
//! Agent output is untrusted: every document is decoded with the same typed
//! decoders the rest of the system uses and rejected on any violation.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::context::{context_to_value, NetworkContext};
use crate::doc::FieldError;
use crate::findings::Finding;
use crate::ir::{policy_from_value, validate_policy, DecodeError, IrPolicy};

use super::model::{intent_from_value, intent_to_value, ResolvedIntent};

pub const RESOLVER_SCHEMA: &str = include_str!("../../schemas/resolved-intent.schema.json");
pub const BUILDER_SCHEMA: &str = include_str!("../../schemas/ir-policy.schema.json");

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Resolver,
    Builder,
}

impl AgentRole {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Resolver => "resolver",
            AgentRole::Builder => "builder",
        }
    }

    pub fn schema(self) -> Value {
        let text = match self {
            AgentRole::Resolver => RESOLVER_SCHEMA,
            AgentRole::Builder => BUILDER_SCHEMA,
        };
        serde_json::from_str(text).expect("bundled schema is valid JSON")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("agent transport failed: {0}")]
    Transport(String),
}

pub trait AgentClient: Send + Sync {
    fn invoke(&self, role: AgentRole, input: &Value, schema: &Value) -> Result<Value, AgentError>;
}

/// POSTs `{"role", "input", "schema"}` and reads the produced document from the body.
#[derive(Debug, Clone)]
pub struct HttpAgent {
    url: String,
    agent: ureq::Agent,
}

impl HttpAgent {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        HttpAgent { url: url.into(), agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl AgentClient for HttpAgent {
    fn invoke(&self, role: AgentRole, input: &Value, schema: &Value) -> Result<Value, AgentError> {
        let body = json!({ "role": role.as_str(), "input": input, "schema": schema });
        let mut resp = self.agent.post(&self.url).send_json(&body).map_err(|e| AgentError::Transport(e.to_string()))?;
        resp.body_mut().read_json::<Value>().map_err(|e| AgentError::Transport(e.to_string()))
    }
}

fn transport(role: AgentRole, e: AgentError) -> Vec<Finding> {
    vec![Finding::new("AGENT_TRANSPORT", format!("{} agent: {e}", role.as_str()))]
}

fn violations(role: AgentRole, errors: &[FieldError]) -> Vec<Finding> {
    errors
        .iter()
        .map(|e| {
            Finding::new("AGENT_SCHEMA_VIOLATION", format!("{} agent output rejected: {e}", role.as_str()))
                .with_subject(e.path.clone())
        })
        .collect()
}

/// Accepts a resolver document only if it decodes and every binding is grounded in `ctx`.
pub fn mediate_resolver(doc: &Value, ctx: &NetworkContext) -> Result<ResolvedIntent, Vec<Finding>> {
    intent_from_value(doc, ctx).map_err(|e| violations(AgentRole::Resolver, &e))
}

/// Accepts a builder document only if it decodes and passes schema validation.
pub fn mediate_builder(doc: &Value, ctx: &NetworkContext) -> Result<IrPolicy, Vec<Finding>> {
    let role = AgentRole::Builder;
    let policy = match policy_from_value(doc) {
        Ok(p) => p,
        Err(DecodeError::Schema(e)) => return Err(violations(role, &e)),
        Err(DecodeError::Syntax(e)) => {
            return Err(violations(role, &[FieldError { path: "$".into(), reason: e.to_string() }]))
        }
    };
    let mut errors: Vec<FieldError> = validate_policy(&policy)
        .into_iter()
        .map(|f| FieldError { path: f.rule_id.map_or_else(|| "rules".into(), |id| format!("rules[{id}]")), reason: format!("{}: {}", f.code, f.message) })
        .collect();
    if policy.context_id != ctx.id {
        errors.push(FieldError { path: "context_id".into(), reason: format!("expected {:?}, found {:?}", ctx.id, policy.context_id) });
    }
    if errors.is_empty() {
        Ok(policy)
    } else {
        Err(violations(role, &errors))
    }
}

pub fn agent_resolve(client: &dyn AgentClient, query: &str, ctx: &NetworkContext) -> Result<ResolvedIntent, Vec<Finding>> {
    let role = AgentRole::Resolver;
    let input = json!({ "query": query, "context": context_to_value(ctx) });
    let doc = client.invoke(role, &input, &role.schema()).map_err(|e| transport(role, e))?;
    mediate_resolver(&doc, ctx)
}

pub fn agent_build(client: &dyn AgentClient, intent: &ResolvedIntent, ctx: &NetworkContext) -> Result<IrPolicy, Vec<Finding>> {
    let role = AgentRole::Builder;
    let input = json!({ "intent": intent_to_value(intent), "context": context_to_value(ctx) });
    let doc = client.invoke(role, &input, &role.schema()).map_err(|e| transport(role, e))?;
    mediate_builder(&doc, ctx)
}
