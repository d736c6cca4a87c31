//! Turns a resolved intent into IR rules.

use std::collections::BTreeSet;

use crate::context::NetworkContext;
use crate::findings::Finding;
use crate::ir::{EndpointRef, IrPolicy, IrRule, DEFAULT_PRIORITY};

use super::model::{Binding, ResolvedIntent};

fn endpoints(bindings: &[Binding]) -> Vec<EndpointRef> {
    let mut out: Vec<EndpointRef> = Vec::new();
    for b in bindings {
        if !out.contains(&b.endpoint) {
            out.push(b.endpoint.clone());
        }
    }
    out
}

fn zones(bindings: &[Binding]) -> Vec<String> {
    bindings.iter().filter_map(|b| b.zone.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

fn label(eps: &[EndpointRef]) -> String {
    if eps.is_empty() {
        return "?".into();
    }
    eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

/// One rule per clause, ids `R1`, `R2`, ... in clause order.
pub fn build_ir(intent: &ResolvedIntent, ctx: &NetworkContext) -> Result<IrPolicy, Finding> {
    if intent.clauses.is_empty() {
        return Err(Finding::new("INTENT_EMPTY", "intent has no clauses to build rules from"));
    }
    let rules = intent
        .clauses
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let sources = endpoints(&c.sources);
            let destinations = endpoints(&c.destinations);
            IrRule {
                id: format!("R{}", i + 1),
                name: format!("{} {} to {}", c.action, label(&sources), label(&destinations)),
                action: c.action.clone(),
                protocol: c.protocol.clone(),
                source_zones: zones(&c.sources),
                destination_zones: zones(&c.destinations),
                sources,
                destinations,
                ports: (!c.ports.is_empty()).then(|| c.ports.clone()),
                application: None,
                direction: c.direction.clone(),
                priority: DEFAULT_PRIORITY,
                logging: true,
                schedule: c.schedule.clone(),
                raw_policy: c.text.clone(),
                ambiguities: c.unresolved.iter().chain(&c.notes).cloned().collect(),
            }
        })
        .collect();
    Ok(IrPolicy::new(ctx.id.clone(), rules))
}
