use std::collections::BTreeMap;

use crate::findings::Finding;
use crate::ir::{IrPolicy, Protocol, MAX_PRIORITY, MIN_PRIORITY};

/// Vendor-independent structural warnings.
pub fn lint_general(policy: &IrPolicy) -> Vec<Finding> {
    let mut out = Vec::new();

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &policy.rules {
        *seen.entry(r.id.as_str()).or_default() += 1;
    }

    for r in &policy.rules {
        let warn = |code: &str, msg: String| Finding::new(code, msg).for_rule(&r.id);
        if r.sources.is_empty() {
            out.push(warn("W-GEN-01", "source list is empty".into()));
        }
        if r.destinations.is_empty() {
            out.push(warn("W-GEN-02", "destination list is empty".into()));
        }
        for spec in r.port_list().iter().filter(|p| !p.is_valid()) {
            out.push(warn("W-GEN-04", format!("port range {spec} is invalid")).with_subject(spec.to_string()));
        }
        if !r.port_list().is_empty() && matches!(r.protocol, Some(Protocol::Icmp) | Some(Protocol::Any)) {
            let proto = r.protocol.as_ref().map(|p| p.as_str()).unwrap_or_default();
            out.push(warn("W-GEN-05", format!("ports have no meaning under protocol {proto}")));
        }
        if !(MIN_PRIORITY..=MAX_PRIORITY).contains(&r.priority) {
            out.push(warn("W-GEN-06", format!("priority {} outside 1..=65535", r.priority)));
        }
        if !r.action.is_known() {
            out.push(warn("W-GEN-07", format!("action {:?} is not allow or deny", r.action.as_str())));
        }
    }

    for (id, n) in seen.into_iter().filter(|(_, n)| *n > 1) {
        out.push(Finding::new("W-GEN-03", format!("rule id {id:?} appears {n} times")).for_rule(id));
    }
    out
}
