use serde::{Deserialize, Serialize};

use crate::findings::Finding;
use crate::ir::{Action, IrPolicy, Protocol};

/// Verdict of the Safety Gate. `safe` holds exactly when `errors` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateResult {
    pub safe: bool,
    pub errors: Vec<Finding>,
}

impl GateResult {
    fn from_errors(errors: Vec<Finding>) -> Self {
        GateResult { safe: errors.is_empty(), errors }
    }
}

/// Blocks allow-any-to-any rules and rules missing zones, endpoints, or protocol.
///
/// A CIDR of `0.0.0.0/0` counts as `any`.
pub fn safety_gate(policy: &IrPolicy) -> GateResult {
    let mut errors = Vec::new();
    for r in &policy.rules {
        let err = |code: &str, msg: &str| Finding::new(code, msg).for_rule(&r.id);
        if r.action == Action::Allow
            && r.sources.iter().any(|e| e.is_any_equivalent())
            && r.destinations.iter().any(|e| e.is_any_equivalent())
        {
            errors.push(err("E-SG-01", "allow rule permits any source to any destination"));
        }
        if r.source_zones.is_empty() || r.destination_zones.is_empty() {
            errors.push(err("E-SG-02", "rule omits source or destination zones"));
        }
        if r.sources.is_empty() || r.destinations.is_empty() {
            errors.push(err("E-SG-03", "rule has an empty source or destination list"));
        }
        let missing_protocol = match &r.protocol {
            None => true,
            Some(Protocol::Other(p)) => p.trim().is_empty(),
            Some(_) => false,
        };
        if missing_protocol {
            errors.push(err("E-SG-04", "rule lacks a protocol specification"));
        }
    }
    GateResult::from_errors(errors)
}
