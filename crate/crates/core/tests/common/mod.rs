//! Seeded generators shared by the property and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlfw_core::context::{context_from_value, context_to_value, AddressKind, AddressObject, NetworkContext, Service, TrustLevel, Zone};
use nlfw_core::ir::{Action, Direction, EndpointRef, IrPolicy, IrRule, PortSpec, Protocol, TimeWindow, Weekday};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const TRUST: [TrustLevel; 4] = [TrustLevel::Trust, TrustLevel::Dmz, TrustLevel::Guest, TrustLevel::Untrust];
const BUILTIN_PORTS: [u32; 5] = [443, 80, 53, 25, 22];

fn window(r: &mut ChaCha8Rng, name: String) -> TimeWindow {
    let n = r.gen_range(1..=7);
    let mut days: Vec<Weekday> = Weekday::ALL.choose_multiple(r, n).copied().collect();
    days.sort();
    let start = r.gen_range(0..23) * 60;
    let end = r.gen_range(start / 60 + 1..=24) * 60;
    TimeWindow { name, days, start, end }
}

fn port_spec(r: &mut ChaCha8Rng) -> PortSpec {
    match r.gen_range(0..4) {
        0 => {
            let p = *BUILTIN_PORTS.choose(r).unwrap();
            PortSpec { lo: p, hi: p }
        }
        1 => {
            let lo = r.gen_range(1..65000);
            PortSpec { lo, hi: lo + r.gen_range(1..500) }
        }
        _ => {
            let p = r.gen_range(1..=65535);
            PortSpec { lo: p, hi: p }
        }
    }
}

/// A valid context with 1..=4 zones and a handful of objects, services and schedules.
pub fn gen_context(r: &mut ChaCha8Rng, id: &str) -> NetworkContext {
    let mut ctx = NetworkContext { id: id.into(), title: format!("generated {id}"), ..Default::default() };
    let nz = r.gen_range(1..=4);
    for i in 0..nz {
        let name = format!("zone{i}");
        ctx.zones.insert(name.clone(), Zone { name, trust_level: *TRUST.choose(r).unwrap() });
    }
    let zones: Vec<String> = ctx.zones.keys().cloned().collect();
    for i in 0..r.gen_range(1..=6) {
        let name = format!("Obj{i}");
        let (kind, value) = match r.gen_range(0..3) {
            0 => (AddressKind::Host, format!("10.{}.{}.{}", i, r.gen_range(0..255), r.gen_range(1..255))),
            1 => (AddressKind::Subnet, format!("10.{}.{}.0/24", 100 + i, r.gen_range(0..255))),
            _ => (AddressKind::Fqdn, format!("host{i}.example.com")),
        };
        let zone = Some(zones.choose(r).unwrap().clone());
        ctx.objects.insert(name.clone(), AddressObject { name, kind, value, zone, aliases: vec![] });
    }
    for i in 0..r.gen_range(0..=4) {
        let name = format!("App{i}");
        let protocol = if r.gen_bool(0.5) { Protocol::Tcp } else { Protocol::Udp };
        let ports = (0..r.gen_range(1..=2)).map(|_| port_spec(r)).collect();
        ctx.services.insert(name.clone(), Service { name, protocol, ports, aliases: vec![] });
    }
    for i in 0..r.gen_range(0..=2) {
        let name = format!("sched{i}");
        ctx.schedules.insert(name.clone(), window(r, name));
    }
    // Through the validating decoder, so generated contexts are known-good.
    context_from_value(&context_to_value(&ctx)).expect("generated context is valid")
}

fn endpoint(r: &mut ChaCha8Rng, ctx: &NetworkContext, zones: &mut Vec<String>, allow_any: bool) -> EndpointRef {
    let zone_names: Vec<&String> = ctx.zones.keys().collect();
    let objects: Vec<&AddressObject> = ctx.objects.values().collect();
    match r.gen_range(0..if allow_any { 4 } else { 3 }) {
        0 | 1 if !objects.is_empty() => {
            let o = objects.choose(r).unwrap();
            zones.extend(o.zone.clone());
            EndpointRef::object(&o.name)
        }
        3 => {
            zones.push((*zone_names.choose(r).unwrap()).clone());
            EndpointRef::any()
        }
        _ => {
            zones.push((*zone_names.choose(r).unwrap()).clone());
            let prefix = *[16u8, 24, 28, 32].choose(r).unwrap();
            EndpointRef::cidr(format!("172.{}.{}.{}/{prefix}", r.gen_range(16..32), r.gen_range(0..255), r.gen_range(0..255)))
        }
    }
}

/// A policy that passes the Safety Gate and compiles against `ctx`.
pub fn gen_policy(r: &mut ChaCha8Rng, ctx: &NetworkContext) -> IrPolicy {
    let n = r.gen_range(1..=5);
    let mut rules = Vec::new();
    for i in 1..=n {
        let action = if r.gen_bool(0.5) { Action::Allow } else { Action::Deny };
        let protocol = [Protocol::Tcp, Protocol::Udp, Protocol::Tcp, Protocol::Icmp, Protocol::Any].choose(r).unwrap().clone();
        let mut rule = IrRule::new(format!("R{i}"), action.clone(), protocol.clone());
        // For allow rules, at most one side may contain an any-equivalent endpoint.
        let any_side = r.gen_range(0..3);
        let mut sz = Vec::new();
        let mut dz = Vec::new();
        for _ in 0..r.gen_range(1..=3) {
            let e = endpoint(r, ctx, &mut sz, action == Action::Deny || any_side == 0);
            rule.sources.push(e);
        }
        for _ in 0..r.gen_range(1..=3) {
            let e = endpoint(r, ctx, &mut dz, action == Action::Deny || any_side == 1);
            rule.destinations.push(e);
        }
        sz.sort();
        sz.dedup();
        dz.sort();
        dz.dedup();
        rule.source_zones = sz;
        rule.destination_zones = dz;
        if protocol.has_ports() && r.gen_bool(0.7) {
            rule.ports = Some((0..r.gen_range(1..=3)).map(|_| port_spec(r)).collect());
        }
        if protocol.has_ports() && rule.ports.is_none() && r.gen_bool(0.3) {
            rule.application = Some(["ssl", "dns", "ssh", "web-browsing"].choose(r).unwrap().to_string());
        }
        rule.direction = [Direction::Any, Direction::Inbound, Direction::Outbound].choose(r).unwrap().clone();
        rule.priority = *[1i64, 50, 100, 100, 200, 65535].choose(r).unwrap();
        rule.logging = r.gen_bool(0.8);
        rule.schedule = match r.gen_range(0..4) {
            0 if !ctx.schedules.is_empty() => ctx.schedules.values().collect::<Vec<_>>().choose(r).map(|w| (*w).clone()),
            1 => Some(window(r, format!("win-r{i}"))),
            _ => None,
        };
        rule.name = format!("generated rule {i}");
        rules.push(rule);
    }
    rules.shuffle(r);
    IrPolicy { context_id: ctx.id.clone(), rules }
}

/// `(context, policy)` pairs for `n` seeds starting at `base`.
pub fn corpus(base: u64, n: u64) -> Vec<(NetworkContext, IrPolicy)> {
    (base..base + n)
        .map(|s| {
            let mut r = rng(s);
            let ctx = gen_context(&mut r, &format!("gen-{s}"));
            let p = gen_policy(&mut r, &ctx);
            (ctx, p)
        })
        .collect()
}

/// Definition lines grouped by `(kind, name)`, read from `set address|service|schedule NAME ...`.
pub fn definitions(lines: &[String]) -> BTreeMap<(String, String), Vec<usize>> {
    let mut out: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for (i, l) in lines.iter().enumerate() {
        let w: Vec<&str> = l.split(' ').collect();
        if w.len() > 2 && w[0] == "set" && matches!(w[1], "address" | "service" | "schedule") {
            out.entry((w[1].to_string(), w[2].to_string())).or_default().push(i);
        }
    }
    out
}

/// Names referenced by rule lines, keyed by the kind of definition they need.
pub fn references(lines: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for l in lines {
        let w: Vec<&str> = l.split(' ').collect();
        if w.len() == 7 && w[..4] == ["set", "rulebase", "security", "rules"] {
            let kind = match w[5] {
                "source" | "destination" if w[6] != "any" => "address",
                "service" if !matches!(w[6], "any" | "application-default") => "service",
                "schedule" => "schedule",
                _ => continue,
            };
            out.push((kind.to_string(), w[6].to_string()));
        }
    }
    out.sort();
    out.dedup();
    out
}
