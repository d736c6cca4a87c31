//! One-way compilation of gate-passing IR into PAN-OS set commands.
//!
//! Output is a pure function of (policy, context). Address objects from the
//! context are defined by the verifier's synthetic header, so the compiler
//! only emits lines for CIDR literals; services and schedules are always
//! emitted, reused from the context by name when one matches exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apps::{builtin_apps_for, is_builtin_app_name, ICMP_APP};
use crate::context::NetworkContext;
use crate::findings::Finding;
use crate::ir::{format_clock, Action, EndpointKind, IrPolicy, IrRule, PortSpec, Protocol, TimeWindow};
use crate::net::{is_identifier, Cidr};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("rule {rule_id}: field {field} cannot be mapped: {reason}")]
pub struct CompileError {
    pub rule_id: String,
    pub field: String,
    pub reason: String,
}

impl CompileError {
    fn new(rule: &IrRule, field: &str, reason: impl Into<String>) -> Self {
        CompileError { rule_id: rule.id.clone(), field: field.into(), reason: reason.into() }
    }

    pub fn finding(&self) -> Finding {
        Finding::new("E-CMP-UNMAPPED", format!("field {} cannot be mapped: {}", self.field, self.reason))
            .for_rule(&self.rule_id)
            .with_subject(self.field.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmittedObject {
    pub name: String,
    /// Taken from the context rather than synthesized.
    pub reused: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmittedObjects {
    pub addresses: Vec<EmittedObject>,
    pub services: Vec<EmittedObject>,
    pub schedules: Vec<EmittedObject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub lines: Vec<String>,
    pub emitted_objects: EmittedObjects,
    pub rule_order: Vec<String>,
}

impl DeviceConfig {
    /// Lines joined with `\n`, newline-terminated.
    pub fn to_text(&self) -> String {
        let mut s = self.lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }
}

fn action_rank(a: &Action) -> u8 {
    match a {
        Action::Deny => 0,
        Action::Allow => 1,
        Action::Other(_) => 2,
    }
}

/// Deny rules first, then ascending priority, then rule id.
pub fn order_rules(policy: &IrPolicy) -> Vec<String> {
    let mut rules: Vec<&IrRule> = policy.rules.iter().collect();
    rules.sort_by(|a, b| {
        (action_rank(&a.action), a.priority, &a.id).cmp(&(action_rank(&b.action), b.priority, &b.id))
    });
    rules.into_iter().map(|r| r.id.clone()).collect()
}

/// One `set schedule` line per day, Monday first.
pub fn emit_schedule(window: &TimeWindow) -> Vec<String> {
    let span = format!("{}-{}", format_clock(window.start), format_clock(window.end));
    window
        .ordered_days()
        .into_iter()
        .map(|d| format!("set schedule {} recurring weekly {} {}", window.name, d.as_str(), span))
        .collect()
}

fn service_name(proto: &Protocol, spec: &PortSpec) -> String {
    format!("svc-{}-{}", proto.as_str(), spec)
}

#[derive(Default)]
struct Emitter {
    addresses: BTreeMap<String, (bool, Option<String>)>,
    services: BTreeMap<String, (bool, String)>,
    schedules: BTreeMap<String, (bool, TimeWindow)>,
}

impl Emitter {
    fn member(&mut self, rule: &IrRule, field: &str, ep: &crate::ir::EndpointRef, ctx: &NetworkContext) -> Result<String, CompileError> {
        match &ep.kind {
            EndpointKind::Any => Ok("any".into()),
            EndpointKind::Object => {
                if !ctx.objects.contains_key(&ep.value) {
                    return Err(CompileError::new(rule, field, format!("object {:?} is not in context {}", ep.value, ctx.id)));
                }
                self.addresses.insert(ep.value.clone(), (true, None));
                Ok(ep.value.clone())
            }
            EndpointKind::Cidr => {
                let c = Cidr::parse(&ep.value)
                    .ok_or_else(|| CompileError::new(rule, field, format!("{:?} is not an IPv4 CIDR", ep.value)))?;
                let net = Cidr { addr: c.network().into(), prefix: c.prefix };
                let name = format!("net-{}-{}", net.addr, net.prefix);
                if ctx.objects.contains_key(&name) {
                    return Err(CompileError::new(rule, field, format!("generated name {name} collides with a context object")));
                }
                self.addresses.insert(name.clone(), (false, Some(format!("set address {name} ip-netmask {net}"))));
                Ok(name)
            }
            EndpointKind::Other(k) => Err(CompileError::new(rule, field, format!("endpoint kind {k:?}"))),
        }
    }

    fn service(&mut self, proto: &Protocol, spec: &PortSpec, ctx: &NetworkContext) -> String {
        let reused = ctx.services.values().find(|s| &s.protocol == proto && s.ports.as_slice() == [*spec]);
        let (name, was_reused) = match reused {
            Some(s) => (s.name.clone(), true),
            None => (service_name(proto, spec), false),
        };
        let line = format!("set service {name} protocol {} port {spec}", proto.as_str());
        self.services.entry(name.clone()).or_insert((was_reused, line));
        name
    }

    fn schedule(&mut self, rule: &IrRule, w: &TimeWindow, ctx: &NetworkContext) -> Result<String, CompileError> {
        if !w.is_valid() {
            return Err(CompileError::new(rule, "schedule", w.violations().join("; ")));
        }
        let reused = match ctx.schedules.get(&w.name) {
            Some(c) if c.same_window(w) => true,
            Some(_) => {
                return Err(CompileError::new(rule, "schedule", format!("name {} differs from the context schedule", w.name)))
            }
            None => false,
        };
        if let Some((_, prior)) = self.schedules.get(&w.name) {
            if !prior.same_window(w) {
                return Err(CompileError::new(rule, "schedule", format!("name {} used for two different windows", w.name)));
            }
            return Ok(w.name.clone());
        }
        self.schedules.insert(w.name.clone(), (reused, w.clone()));
        Ok(w.name.clone())
    }

    /// (application, services) attribute values for a rule.
    fn app_and_service(&mut self, rule: &IrRule, ctx: &NetworkContext) -> Result<(Vec<String>, Vec<String>), CompileError> {
        let proto = rule
            .protocol
            .as_ref()
            .ok_or_else(|| CompileError::new(rule, "protocol", "protocol is absent"))?;
        let label = match &rule.application {
            Some(a) if is_builtin_app_name(a) => Some(a.clone()),
            Some(a) => return Err(CompileError::new(rule, "application", format!("{a:?} is not a known application"))),
            None => None,
        };
        let ports = rule.port_list();
        if let Some(p) = ports.iter().find(|p| !p.is_valid()) {
            return Err(CompileError::new(rule, "ports", format!("invalid port range {p}")));
        }
        let default = || vec!["application-default".to_string()];
        match proto {
            Protocol::Other(p) => Err(CompileError::new(rule, "protocol", format!("{p:?}"))),
            Protocol::Icmp => Ok((vec![ICMP_APP.into()], default())),
            Protocol::Any => Ok((vec![label.unwrap_or_else(|| "any".into())], vec!["any".into()])),
            Protocol::Tcp | Protocol::Udp if ports.is_empty() => match label {
                Some(a) => Ok((vec![a], default())),
                None => Ok((vec!["any".into()], vec!["any".into()])),
            },
            Protocol::Tcp | Protocol::Udp => {
                if let Some(apps) = builtin_apps_for(proto, ports) {
                    let apps = match label {
                        Some(a) => vec![a],
                        None => apps.into_iter().map(String::from).collect(),
                    };
                    return Ok((apps, default()));
                }
                let apps = vec![label.unwrap_or_else(|| "any".into())];
                let mut services: Vec<String> = ports.iter().map(|p| self.service(proto, p, ctx)).collect();
                services.sort();
                services.dedup();
                Ok((apps, services))
            }
        }
    }
}

fn zone_list<'a>(rule: &IrRule, field: &str, zones: &'a [String], ctx: &NetworkContext) -> Result<BTreeSet<&'a str>, CompileError> {
    for z in zones {
        if z != "any" && !ctx.zones.contains_key(z) {
            return Err(CompileError::new(rule, field, format!("zone {z:?} is not in context {}", ctx.id)));
        }
    }
    Ok(zones.iter().map(String::as_str).collect())
}

fn action_text(rule: &IrRule) -> Result<&'static str, CompileError> {
    match &rule.action {
        Action::Allow => Ok("allow"),
        Action::Deny => Ok("deny"),
        Action::Other(a) => Err(CompileError::new(rule, "action", format!("{a:?}"))),
    }
}

/// Compiles a policy that has passed the Safety Gate.
pub fn compile(policy: &IrPolicy, ctx: &NetworkContext) -> Result<DeviceConfig, CompileError> {
    let mut seen = BTreeSet::new();
    for r in &policy.rules {
        if !is_identifier(&r.id) {
            return Err(CompileError::new(r, "id", "rule id must match [A-Za-z0-9_-]{1,63}"));
        }
        if !seen.insert(r.id.as_str()) {
            return Err(CompileError::new(r, "id", "duplicate rule id"));
        }
    }

    let mut em = Emitter::default();
    let order = order_rules(policy);
    let mut blocks = Vec::new();
    for id in &order {
        let r = policy.rule(id).expect("ordered ids come from the policy");
        let p = format!("set rulebase security rules {}", r.id);
        let from = zone_list(r, "source_zones", &r.source_zones, ctx)?;
        let to = zone_list(r, "destination_zones", &r.destination_zones, ctx)?;
        let mut src = BTreeSet::new();
        for ep in &r.sources {
            src.insert(em.member(r, "sources", ep, ctx)?);
        }
        let mut dst = BTreeSet::new();
        for ep in &r.destinations {
            dst.insert(em.member(r, "destinations", ep, ctx)?);
        }
        let (apps, services) = em.app_and_service(r, ctx)?;
        let action = action_text(r)?;
        let schedule = r.schedule.as_ref().map(|w| em.schedule(r, w, ctx)).transpose()?;

        blocks.extend(from.iter().map(|z| format!("{p} from {z}")));
        blocks.extend(to.iter().map(|z| format!("{p} to {z}")));
        blocks.extend(src.iter().map(|m| format!("{p} source {m}")));
        blocks.extend(dst.iter().map(|m| format!("{p} destination {m}")));
        blocks.extend(apps.iter().map(|a| format!("{p} application {a}")));
        blocks.extend(services.iter().map(|s| format!("{p} service {s}")));
        blocks.push(format!("{p} action {action}"));
        blocks.push(format!("{p} log-end {}", if r.logging { "yes" } else { "no" }));
        if let Some(s) = schedule {
            blocks.push(format!("{p} schedule {s}"));
        }
    }

    let mut lines = Vec::new();
    let mut manifest = EmittedObjects::default();
    for (name, (reused, line)) in em.addresses {
        lines.extend(line);
        manifest.addresses.push(EmittedObject { name, reused });
    }
    for (name, (reused, line)) in em.services {
        lines.push(line);
        manifest.services.push(EmittedObject { name, reused });
    }
    for (name, (reused, w)) in em.schedules {
        lines.extend(emit_schedule(&w));
        manifest.schedules.push(EmittedObject { name, reused });
    }
    lines.extend(blocks);
    Ok(DeviceConfig { lines, emitted_objects: manifest, rule_order: order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ecommerce;
    use crate::ir::{EndpointRef, Weekday};

    fn rule(id: &str, action: Action, priority: i64) -> IrRule {
        let mut r = IrRule::new(id, action, Protocol::Tcp);
        r.priority = priority;
        r
    }

    #[test]
    fn ordering_examples() {
        let p = IrPolicy::new("c", vec![rule("R1", Action::Allow, 100), rule("R2", Action::Deny, 100)]);
        assert_eq!(order_rules(&p), ["R2", "R1"]);
        let p = IrPolicy::new("c", vec![rule("R1", Action::Allow, 50), rule("R2", Action::Allow, 10)]);
        assert_eq!(order_rules(&p), ["R2", "R1"]);
        let p = IrPolicy::new("c", vec![rule("R9", Action::Allow, 1)]);
        assert_eq!(order_rules(&p), ["R9"]);
        let p = IrPolicy::new("c", vec![rule("b", Action::Deny, 5), rule("a", Action::Deny, 5)]);
        assert_eq!(order_rules(&p), ["a", "b"]);
    }

    #[test]
    fn schedule_lines() {
        let w = TimeWindow { name: "wk-0800-1800".into(), days: Weekday::WORKWEEK.to_vec(), start: 480, end: 1080 };
        let lines = emit_schedule(&w);
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "set schedule wk-0800-1800 recurring weekly monday 08:00-18:00");
        assert_eq!(lines[4], "set schedule wk-0800-1800 recurring weekly friday 08:00-18:00");
        let w = TimeWindow { name: "s".into(), days: vec![Weekday::Sunday], start: 0, end: 60 };
        assert_eq!(emit_schedule(&w), ["set schedule s recurring weekly sunday 00:00-01:00"]);
    }

    fn fixture_rule() -> IrRule {
        let ctx = ecommerce();
        let mut r = IrRule::new("R1", Action::Allow, Protocol::Tcp);
        r.sources = vec![EndpointRef::object("WebServer")];
        r.destinations = vec![EndpointRef::object("DB")];
        r.source_zones = vec!["dmz".into()];
        r.destination_zones = vec!["trust".into()];
        r.ports = Some(vec![PortSpec::single(5432)]);
        r.schedule = Some(ctx.schedules["business-hours"].clone());
        r
    }

    #[test]
    fn fixture_rule_compiles() {
        let cfg = compile(&IrPolicy::new("ecommerce", vec![fixture_rule()]), &ecommerce()).unwrap();
        let mut expected = vec!["set service svc-tcp-5432 protocol tcp port 5432".to_string()];
        for d in ["monday", "tuesday", "wednesday", "thursday", "friday"] {
            expected.push(format!("set schedule business-hours recurring weekly {d} 09:00-17:00"));
        }
        for tail in [
            "from dmz",
            "to trust",
            "source WebServer",
            "destination DB",
            "application any",
            "service svc-tcp-5432",
            "action allow",
            "log-end yes",
            "schedule business-hours",
        ] {
            expected.push(format!("set rulebase security rules R1 {tail}"));
        }
        assert_eq!(cfg.lines, expected);
        assert_eq!(cfg.emitted_objects.services, [EmittedObject { name: "svc-tcp-5432".into(), reused: false }]);
        assert_eq!(cfg.emitted_objects.schedules, [EmittedObject { name: "business-hours".into(), reused: true }]);
        assert!(cfg.to_text().ends_with("schedule business-hours\n"));
    }

    #[test]
    fn builtin_app_used_for_443() {
        let mut r = fixture_rule();
        r.ports = Some(vec![PortSpec::single(443)]);
        r.schedule = None;
        let cfg = compile(&IrPolicy::new("ecommerce", vec![r]), &ecommerce()).unwrap();
        assert!(!cfg.lines.iter().any(|l| l.starts_with("set service")));
        assert!(cfg.lines.contains(&"set rulebase security rules R1 application ssl".to_string()));
        assert!(cfg.lines.contains(&"set rulebase security rules R1 service application-default".to_string()));
    }

    #[test]
    fn shared_service_emitted_once_and_context_service_reused() {
        let mut a = fixture_rule();
        a.schedule = None;
        let mut b = a.clone();
        b.id = "R2".into();
        let mut c = a.clone();
        c.id = "R3".into();
        c.protocol = Some(Protocol::Udp);
        c.ports = Some(vec![PortSpec::single(53), PortSpec::single(5432)]);
        let cfg = compile(&IrPolicy::new("ecommerce", vec![a, b, c]), &ecommerce()).unwrap();
        let svc: Vec<_> = cfg.lines.iter().filter(|l| l.starts_with("set service")).collect();
        assert_eq!(
            svc,
            ["set service DNS protocol udp port 53", "set service svc-tcp-5432 protocol tcp port 5432", "set service svc-udp-5432 protocol udp port 5432"]
        );
        assert!(cfg.emitted_objects.services.contains(&EmittedObject { name: "DNS".into(), reused: true }));
    }

    #[test]
    fn cidr_members_become_address_objects() {
        let mut r = fixture_rule();
        r.sources = vec![EndpointRef::cidr("10.9.8.7/24"), EndpointRef::any()];
        let cfg = compile(&IrPolicy::new("ecommerce", vec![r]), &ecommerce()).unwrap();
        assert_eq!(cfg.lines[0], "set address net-10.9.8.0-24 ip-netmask 10.9.8.0/24");
        assert!(cfg.lines.contains(&"set rulebase security rules R1 source any".to_string()));
        assert!(cfg.lines.contains(&"set rulebase security rules R1 source net-10.9.8.0-24".to_string()));
    }

    #[test]
    fn unmappable_fields() {
        let ctx = ecommerce();
        let mut r = fixture_rule();
        r.sources = vec![EndpointRef::object("Nowhere")];
        let e = compile(&IrPolicy::new("ecommerce", vec![r]), &ctx).unwrap_err();
        assert_eq!((e.rule_id.as_str(), e.field.as_str()), ("R1", "sources"));
        assert_eq!(e.finding().code, "E-CMP-UNMAPPED");

        let mut r = fixture_rule();
        r.protocol = Some(Protocol::Other("sctp".into()));
        assert_eq!(compile(&IrPolicy::new("ecommerce", vec![r]), &ctx).unwrap_err().field, "protocol");

        let mut r = fixture_rule();
        r.schedule.as_mut().unwrap().start = 0;
        assert_eq!(compile(&IrPolicy::new("ecommerce", vec![r]), &ctx).unwrap_err().field, "schedule");
    }

    #[test]
    fn deterministic() {
        let p = IrPolicy::new("ecommerce", vec![fixture_rule()]);
        assert_eq!(compile(&p, &ecommerce()).unwrap().to_text(), compile(&p, &ecommerce()).unwrap().to_text());
    }
}
