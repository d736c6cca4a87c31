use super::codec::endpoint_to_value;
use super::{validate_policy, Action, Direction, EndpointKind, IrPolicy, IrRule, Protocol};
use crate::findings::Finding;
use crate::json::canonical_string;

fn sort_by_text<T: Clone>(items: &[T], text: impl Fn(&T) -> String) -> Vec<T> {
    let mut keyed: Vec<(String, T)> = items.iter().map(|i| (text(i), i.clone())).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    keyed.into_iter().map(|(_, v)| v).collect()
}

fn lower_action(a: &Action) -> Action {
    Action::from_text(&a.as_str().to_lowercase())
}

fn canonical_rule(r: &IrRule) -> IrRule {
    let lower_kind = |k: &EndpointKind| EndpointKind::from_text(&k.as_str().to_lowercase());
    let endpoints = |list: &[super::EndpointRef]| {
        let lowered: Vec<_> =
            list.iter().map(|e| super::EndpointRef { kind: lower_kind(&e.kind), value: e.value.clone() }).collect();
        sort_by_text(&lowered, |e| canonical_string(&endpoint_to_value(e)))
    };
    let ports = r
        .ports
        .as_ref()
        .filter(|p| !p.is_empty())
        .map(|p| sort_by_text(p, |s| s.to_string()));
    let schedule = r.schedule.as_ref().map(|w| {
        let mut w = w.clone();
        w.days = sort_by_text(&w.days, |d| d.as_str().to_string());
        w
    });
    IrRule {
        id: r.id.clone(),
        name: r.name.clone(),
        action: lower_action(&r.action),
        protocol: r.protocol.as_ref().map(|p| Protocol::from_text(&p.as_str().to_lowercase())),
        sources: endpoints(&r.sources),
        destinations: endpoints(&r.destinations),
        source_zones: sort_by_text(&r.source_zones, String::clone),
        destination_zones: sort_by_text(&r.destination_zones, String::clone),
        ports,
        application: r.application.clone(),
        direction: Direction::from_text(&r.direction.as_str().to_lowercase()),
        priority: r.priority,
        logging: r.logging,
        schedule,
        raw_policy: String::new(),
        ambiguities: Vec::new(),
    }
}

/// Canonical form used for structural equality: member lists sorted and
/// de-duplicated by their serialized text, enum values lower-cased, an empty
/// port list folded into "absent", and metadata (`raw_policy`,
/// `ambiguities`) cleared. Rejects policies that fail [`validate_policy`].
pub fn canonicalize(policy: &IrPolicy) -> Result<IrPolicy, Vec<Finding>> {
    let findings = validate_policy(policy);
    if !findings.is_empty() {
        return Err(findings);
    }
    Ok(IrPolicy { context_id: policy.context_id.clone(), rules: policy.rules.iter().map(canonical_rule).collect() })
}
