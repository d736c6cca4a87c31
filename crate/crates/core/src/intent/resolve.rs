//! Grounds clause phrases against a network context.

use crate::context::{lookup, Category, MatchSet, NetworkContext};
use crate::ir::{format_clock, parse_port_spec, Action, Direction, EndpointRef, PortSpec, Protocol, TimeWindow, Weekday};
use crate::net::{parse_host, Cidr};

use super::grammar::{ClauseAst, SchedulePhrase};
use super::model::{Binding, ResolvedClause, ResolvedIntent, ANY_ZONE};

const ANY_WORDS: &[&str] = &["any", "anyone", "anything", "anywhere", "everyone", "everything", "all"];

struct Log {
    unresolved: Vec<String>,
    notes: Vec<String>,
}

impl Log {
    fn fail(&mut self, phrase: &str, note: String) {
        self.unresolved.push(phrase.to_string());
        self.notes.push(note);
    }
}

fn strip_article(phrase: &str) -> &str {
    let p = phrase.trim();
    match p.get(..4) {
        Some(head) if head.eq_ignore_ascii_case("the ") => p[4..].trim_start(),
        _ => p,
    }
}

fn candidate_list(m: &MatchSet, cats: &[Category]) -> Vec<String> {
    m.candidates.iter().filter(|c| cats.contains(&c.category)).map(|c| format!("{} {}", c.category, c.name)).collect()
}

/// Zone of the most specific host or subnet object containing `net`.
fn containing_zone(ctx: &NetworkContext, net: &Cidr) -> Option<String> {
    ctx.objects
        .values()
        .filter_map(|o| Some((o.network()?, o.zone.clone()?)))
        .filter(|(n, _)| n.contains(net))
        .max_by_key(|(n, _)| n.prefix)
        .map(|(_, z)| z)
}

fn resolve_endpoint(phrase: &str, ctx: &NetworkContext, log: &mut Log) -> Option<Binding> {
    let p = strip_article(phrase);
    if ANY_WORDS.iter().any(|w| p.eq_ignore_ascii_case(w)) {
        return Some(Binding { endpoint: EndpointRef::any(), zone: Some(ANY_ZONE.into()) });
    }
    if let Some(net) = Cidr::parse(p).or_else(|| parse_host(p).map(Cidr::host)) {
        let endpoint = EndpointRef::cidr(net.to_string());
        if net.is_default_route() {
            return Some(Binding { endpoint, zone: Some(ANY_ZONE.into()) });
        }
        let zone = containing_zone(ctx, &net);
        if zone.is_none() {
            log.fail(phrase, format!("no context subnet contains {net}; its zone is unknown"));
        }
        return Some(Binding { endpoint, zone });
    }
    let m = lookup(ctx, p);
    let hits = candidate_list(&m, &[Category::Object, Category::Zone]);
    match (m.in_category(Category::Object).as_slice(), m.in_category(Category::Zone).as_slice()) {
        ([obj], []) => {
            let o = &ctx.objects[&obj.name];
            if o.zone.is_none() {
                log.fail(phrase, format!("object {} has no zone", o.name));
            }
            Some(Binding { endpoint: EndpointRef::object(o.name.clone()), zone: o.zone.clone() })
        }
        ([], [zone]) => Some(Binding { endpoint: EndpointRef::any(), zone: Some(zone.name.clone()) }),
        _ if hits.len() > 1 => {
            log.fail(phrase, format!("{phrase:?} is ambiguous: {}", hits.join(", ")));
            None
        }
        _ => {
            let note = match m.candidates.first() {
                Some(c) => format!("{phrase:?} names {} {}, not an address or zone", c.category, c.name),
                None => format!("{phrase:?} matches nothing in context {}", ctx.id),
            };
            log.fail(phrase, note);
            None
        }
    }
}

struct ServiceBinding {
    protocol: Option<Protocol>,
    ports: Vec<PortSpec>,
    service: Option<String>,
}

fn bare_protocol(text: &str) -> Option<Protocol> {
    Some(Protocol::from_text(text)).filter(Protocol::is_known)
}

fn resolve_service(c: &ClauseAst, ctx: &NetworkContext, log: &mut Log) -> ServiceBinding {
    let none = ServiceBinding { protocol: None, ports: Vec::new(), service: None };
    let Some(phrase) = c.service_phrase.as_deref().or(c.proto_port_phrase.as_deref()) else {
        return ServiceBinding { protocol: Some(Protocol::Any), ..none };
    };
    let m = lookup(ctx, phrase);
    match m.in_category(Category::Service).as_slice() {
        [svc] => {
            let s = &ctx.services[&svc.name];
            return ServiceBinding { protocol: Some(s.protocol.clone()), ports: s.ports.clone(), service: Some(s.name.clone()) };
        }
        [] => {}
        _ => {
            let hits = candidate_list(&m, &[Category::Service]);
            log.fail(phrase, format!("{phrase:?} is ambiguous: {}", hits.join(", ")));
            return none;
        }
    }
    if c.proto_port_phrase.is_some() {
        let (proto, port) = phrase.split_once(' ').expect("grammar emits `proto port`");
        let protocol = Protocol::from_text(proto);
        if protocol == Protocol::Icmp {
            log.notes.push(format!("port {port} ignored: icmp carries no ports"));
            return ServiceBinding { protocol: Some(protocol), ..none };
        }
        let spec = match parse_port_spec(port) {
            Ok(spec) => spec,
            Err(e) => {
                log.fail(phrase, e.to_string());
                PortSpec::parse_shape(port).expect("grammar checked the port shape")
            }
        };
        return ServiceBinding { protocol: Some(protocol), ports: vec![spec], service: None };
    }
    match bare_protocol(phrase) {
        Some(protocol) => ServiceBinding { protocol: Some(protocol), ..none },
        None => {
            log.fail(phrase, format!("{phrase:?} is neither a context service nor a protocol"));
            none
        }
    }
}

fn clock_tag(minutes: u32) -> String {
    format_clock(minutes).replace(':', "")
}

/// Generated name for an inline window: `wk-` for Monday to Friday, `daily-`
/// for every day, otherwise the concatenated day abbreviations.
pub fn window_name(days: &[Weekday], start: u32, end: u32) -> String {
    let mut days = days.to_vec();
    days.sort();
    days.dedup();
    let prefix = if days == Weekday::WORKWEEK {
        "wk".to_string()
    } else if days == Weekday::ALL {
        "daily".to_string()
    } else {
        days.iter().map(|d| d.abbrev()).collect()
    };
    format!("{prefix}-{}-{}", clock_tag(start), clock_tag(end))
}

fn resolve_schedule(s: &SchedulePhrase, ctx: &NetworkContext, log: &mut Log) -> Option<TimeWindow> {
    match s {
        SchedulePhrase::During { phrase } => {
            let m = lookup(ctx, strip_article(phrase));
            match m.in_category(Category::Schedule).as_slice() {
                [one] => Some(ctx.schedules[&one.name].clone()),
                [] => {
                    log.fail(phrase, format!("no context schedule matches {phrase:?}"));
                    None
                }
                _ => {
                    let hits = candidate_list(&m, &[Category::Schedule]);
                    log.fail(phrase, format!("{phrase:?} is ambiguous: {}", hits.join(", ")));
                    None
                }
            }
        }
        SchedulePhrase::Window { days, start, end, .. } => {
            let mut w = TimeWindow { name: window_name(days, *start, *end), days: days.clone(), start: *start, end: *end };
            w.days = w.ordered_days();
            Some(ctx.schedules.values().find(|c| c.same_window(&w)).cloned().unwrap_or(w))
        }
    }
}

fn resolve_clause(c: &ClauseAst, ctx: &NetworkContext) -> ResolvedClause {
    let mut log = Log { unresolved: Vec::new(), notes: Vec::new() };
    let direction = c.direction_word.clone().unwrap_or(Direction::Any);
    let sources: Vec<Binding> = resolve_endpoint(&c.subject_phrase, ctx, &mut log).into_iter().collect();
    let destinations = match &c.object_phrase {
        Some(p) => resolve_endpoint(p, ctx, &mut log).into_iter().collect(),
        None if c.action == Action::Deny && direction == Direction::Outbound => {
            let zones = ctx.untrust_zones();
            if zones.is_empty() {
                log.fail("<destination>", "no untrust-level zone to bind an outbound deny to".into());
            }
            zones.into_iter().map(|z| Binding { endpoint: EndpointRef::any(), zone: Some(z.to_string()) }).collect()
        }
        None => {
            log.fail("<destination>", "deny clause names no destination and is not outbound".into());
            Vec::new()
        }
    };
    let svc = resolve_service(c, ctx, &mut log);
    let schedule = c.schedule_phrase.as_ref().and_then(|s| resolve_schedule(s, ctx, &mut log));
    ResolvedClause {
        action: c.action.clone(),
        sources,
        destinations,
        protocol: svc.protocol,
        ports: svc.ports,
        service: svc.service,
        direction,
        schedule,
        unresolved: log.unresolved,
        notes: log.notes,
        text: c.text.clone(),
    }
}

/// Grounds every clause. Failures are recorded per clause, never thrown.
pub fn resolve(clauses: &[ClauseAst], ctx: &NetworkContext) -> ResolvedIntent {
    ResolvedIntent { context_id: ctx.id.clone(), clauses: clauses.iter().map(|c| resolve_clause(c, ctx)).collect() }
}
