use std::collections::BTreeMap;

use super::{EndpointKind, IrPolicy, IrRule, Protocol, MAX_PRIORITY, MIN_PRIORITY};
use crate::findings::Finding;
use crate::net::{is_identifier, Cidr};

/// Reports every schema violation in `policy`; empty iff all type invariants hold.
pub fn validate_policy(policy: &IrPolicy) -> Vec<Finding> {
    let mut out = Vec::new();
    if policy.rules.is_empty() {
        out.push(Finding::new("SCHEMA_EMPTY_POLICY", "policy must contain at least one rule"));
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &policy.rules {
        *counts.entry(r.id.as_str()).or_default() += 1;
    }
    for (id, n) in counts.iter().filter(|(_, n)| **n > 1) {
        out.push(
            Finding::new("SCHEMA_DUP_ID", format!("rule id {id:?} used by {n} rules"))
                .for_rule(*id)
                .with_subject("id"),
        );
    }

    for r in &policy.rules {
        validate_rule(r, &mut out);
    }
    out
}

fn bad_enum(rule: &IrRule, field: &str, value: &str, known: &[&str]) -> Finding {
    Finding::new("SCHEMA_BAD_ENUM", format!("{field} {value:?} is not one of {}", known.join(", ")))
        .for_rule(&rule.id)
        .with_subject(field)
}

fn validate_rule(r: &IrRule, out: &mut Vec<Finding>) {
    if !is_identifier(&r.id) {
        out.push(
            Finding::new("SCHEMA_BAD_ID", format!("rule id {:?} must match [A-Za-z0-9_-]{{1,63}}", r.id))
                .for_rule(&r.id)
                .with_subject("id"),
        );
    }
    if !r.action.is_known() {
        out.push(bad_enum(r, "action", r.action.as_str(), super::Action::KNOWN));
    }
    match &r.protocol {
        None => out.push(
            Finding::new("SCHEMA_MISSING_PROTOCOL", "protocol is required").for_rule(&r.id).with_subject("protocol"),
        ),
        Some(p) if !p.is_known() => out.push(bad_enum(r, "protocol", p.as_str(), Protocol::KNOWN)),
        _ => {}
    }
    if !r.direction.is_known() {
        out.push(bad_enum(r, "direction", r.direction.as_str(), super::Direction::KNOWN));
    }

    for (field, list) in [("sources", &r.sources), ("destinations", &r.destinations)] {
        for ep in list {
            match &ep.kind {
                EndpointKind::Other(k) => out.push(bad_enum(r, field, k, EndpointKind::KNOWN)),
                EndpointKind::Cidr if Cidr::parse(&ep.value).is_none() => out.push(
                    Finding::new("SCHEMA_BAD_CIDR", format!("{:?} is not an IPv4 CIDR", ep.value))
                        .for_rule(&r.id)
                        .with_subject(field),
                ),
                EndpointKind::Object if ep.value.is_empty() => out.push(
                    Finding::new("SCHEMA_EMPTY_OBJECT", "object endpoint needs a name")
                        .for_rule(&r.id)
                        .with_subject(field),
                ),
                _ => {}
            }
        }
    }

    for spec in r.port_list() {
        if !spec.is_valid() {
            out.push(
                Finding::new("SCHEMA_PORT_RANGE", format!("port spec {spec} violates 1 <= lo <= hi <= 65535"))
                    .for_rule(&r.id)
                    .with_subject("ports"),
            );
        }
    }
    if !r.port_list().is_empty() && matches!(r.protocol, Some(Protocol::Icmp) | Some(Protocol::Any)) {
        out.push(
            Finding::new(
                "SCHEMA_PORTS_FORBIDDEN",
                format!("ports are not allowed under protocol {}", r.protocol.as_ref().expect("matched")),
            )
            .for_rule(&r.id)
            .with_subject("ports"),
        );
    }

    if !(MIN_PRIORITY..=MAX_PRIORITY).contains(&r.priority) {
        out.push(
            Finding::new("SCHEMA_PRIORITY_RANGE", format!("priority {} outside 1..=65535", r.priority))
                .for_rule(&r.id)
                .with_subject("priority"),
        );
    }

    if let Some(w) = &r.schedule {
        for v in w.violations() {
            out.push(
                Finding::new("SCHEMA_BAD_SCHEDULE", format!("schedule {:?}: {v}", w.name))
                    .for_rule(&r.id)
                    .with_subject("schedule"),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Action, Direction, EndpointRef, PortSpec, TimeWindow, Weekday};

    fn rule() -> IrRule {
        let mut r = IrRule::new("R1", Action::Allow, Protocol::Tcp);
        r.sources = vec![EndpointRef::object("WebServer")];
        r.destinations = vec![EndpointRef::object("DB")];
        r.source_zones = vec!["dmz".into()];
        r.destination_zones = vec!["trust".into()];
        r.ports = Some(vec![PortSpec { lo: 5432, hi: 5432 }]);
        r
    }

    fn codes(p: &IrPolicy) -> Vec<String> {
        validate_policy(p).into_iter().map(|f| f.code).collect()
    }

    #[test]
    fn well_formed_rule_is_clean() {
        assert!(codes(&IrPolicy::new("ecommerce", vec![rule()])).is_empty());
    }

    #[test]
    fn zero_port() {
        let mut r = rule();
        r.ports = Some(vec![PortSpec { lo: 0, hi: 10 }]);
        assert_eq!(codes(&IrPolicy::new("c", vec![r])), ["SCHEMA_PORT_RANGE"]);
    }

    #[test]
    fn duplicate_ids() {
        let p = IrPolicy::new("c", vec![rule(), rule()]);
        assert_eq!(codes(&p), ["SCHEMA_DUP_ID"]);
    }

    #[test]
    fn each_violation_kind() {
        let cases: Vec<(fn(&mut IrRule), &str)> = vec![
            (|r| r.id = "bad id".into(), "SCHEMA_BAD_ID"),
            (|r| r.action = Action::Other("permit".into()), "SCHEMA_BAD_ENUM"),
            (|r| r.direction = Direction::Other("sideways".into()), "SCHEMA_BAD_ENUM"),
            (|r| r.protocol = None, "SCHEMA_MISSING_PROTOCOL"),
            (|r| r.sources[0] = EndpointRef::cidr("10.0.0.0/40"), "SCHEMA_BAD_CIDR"),
            (|r| r.destinations[0] = EndpointRef::object(""), "SCHEMA_EMPTY_OBJECT"),
            (|r| r.priority = 0, "SCHEMA_PRIORITY_RANGE"),
            (|r| r.priority = 65536, "SCHEMA_PRIORITY_RANGE"),
            (
                |r| r.schedule = Some(TimeWindow { name: "x".into(), days: vec![Weekday::Monday], start: 600, end: 60 }),
                "SCHEMA_BAD_SCHEDULE",
            ),
            (|r| r.protocol = Some(Protocol::Icmp), "SCHEMA_PORTS_FORBIDDEN"),
        ];
        for (mutate, code) in cases {
            let mut r = rule();
            mutate(&mut r);
            assert_eq!(codes(&IrPolicy::new("c", vec![r])), [code]);
        }
    }

    #[test]
    fn empty_policy() {
        assert_eq!(codes(&IrPolicy::new("c", vec![])), ["SCHEMA_EMPTY_POLICY"]);
    }
}
