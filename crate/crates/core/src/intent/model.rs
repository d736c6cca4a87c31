//! The resolved-intent record passed from the resolver to the IR builder,
//! and its document form (the contract an external resolver agent must meet).

use serde_json::{json, Map, Value};

use crate::context::NetworkContext;
use crate::doc::{index, join, Decoder, FieldError};
use crate::ir::{
    codec_window_to_value, decode_window_value, parse_port_spec, Action, Direction, EndpointKind, EndpointRef,
    PortSpec, Protocol, TimeWindow,
};
use crate::net::Cidr;

/// Pseudo-zone for endpoints that match anything.
pub const ANY_ZONE: &str = "any";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub endpoint: EndpointRef,
    /// Zone the endpoint lives in, when known.
    pub zone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedClause {
    pub action: Action,
    pub sources: Vec<Binding>,
    pub destinations: Vec<Binding>,
    /// `None` when no protocol could be determined.
    pub protocol: Option<Protocol>,
    pub ports: Vec<PortSpec>,
    /// Context service the ports came from.
    pub service: Option<String>,
    pub direction: Direction,
    pub schedule: Option<TimeWindow>,
    /// Phrases that failed or were ambiguous.
    pub unresolved: Vec<String>,
    /// Free-text explanations attached to the clause.
    pub notes: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedIntent {
    pub context_id: String,
    pub clauses: Vec<ResolvedClause>,
}

impl ResolvedIntent {
    pub fn unresolved(&self) -> impl Iterator<Item = &str> {
        self.clauses.iter().flat_map(|c| c.unresolved.iter().map(String::as_str))
    }
}

fn binding_to_value(b: &Binding) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), json!(b.endpoint.kind.as_str()));
    m.insert("value".into(), json!(b.endpoint.value));
    if let Some(z) = &b.zone {
        m.insert("zone".into(), json!(z));
    }
    Value::Object(m)
}

fn clause_to_value(c: &ResolvedClause) -> Value {
    let mut m = Map::new();
    m.insert("action".into(), json!(c.action.as_str()));
    m.insert("sources".into(), c.sources.iter().map(binding_to_value).collect());
    m.insert("destinations".into(), c.destinations.iter().map(binding_to_value).collect());
    if let Some(p) = &c.protocol {
        m.insert("protocol".into(), json!(p.as_str()));
    }
    m.insert("ports".into(), c.ports.iter().map(|p| json!(p.to_string())).collect());
    if let Some(s) = &c.service {
        m.insert("service".into(), json!(s));
    }
    m.insert("direction".into(), json!(c.direction.as_str()));
    if let Some(w) = &c.schedule {
        m.insert("schedule".into(), codec_window_to_value(w));
    }
    m.insert("unresolved".into(), json!(c.unresolved));
    m.insert("notes".into(), json!(c.notes));
    m.insert("text".into(), json!(c.text));
    Value::Object(m)
}

pub fn intent_to_value(intent: &ResolvedIntent) -> Value {
    json!({
        "context_id": intent.context_id,
        "clauses": intent.clauses.iter().map(clause_to_value).collect::<Vec<_>>(),
    })
}

const CLAUSE_KEYS: &[&str] =
    &["action", "sources", "destinations", "protocol", "ports", "service", "direction", "schedule", "unresolved", "notes", "text"];

fn check_zone(d: &mut Decoder, ctx: &NetworkContext, path: &str, zone: &str) {
    if zone != ANY_ZONE && !ctx.zones.contains_key(zone) {
        d.fail(path, format!("zone {zone:?} is not defined in context {}", ctx.id));
    }
}

fn decode_bindings(d: &mut Decoder, ctx: &NetworkContext, obj: &Map<String, Value>, path: &str, key: &str) -> Option<Vec<Binding>> {
    let arr = d.req_array(obj, path, key)?;
    let p = join(path, key);
    let mut out = Vec::new();
    for (i, v) in arr.iter().enumerate() {
        let bp = index(&p, i);
        let Some(b) = d.object(v, &bp) else { continue };
        d.reject_unknown(b, &bp, &["kind", "value", "zone"]);
        let (Some(kind), Some(value), Some(zone)) =
            (d.req_str(b, &bp, "kind"), d.opt_str(b, &bp, "value"), d.opt_str(b, &bp, "zone"))
        else {
            continue;
        };
        let value = value.unwrap_or_default();
        let kind = EndpointKind::from_text(&kind);
        match &kind {
            EndpointKind::Object if !ctx.objects.contains_key(&value) => {
                d.fail(join(&bp, "value"), format!("object {value:?} is not defined in context {}", ctx.id))
            }
            EndpointKind::Cidr if Cidr::parse(&value).is_none() => d.fail(join(&bp, "value"), "not an IPv4 CIDR"),
            EndpointKind::Other(k) => d.fail(join(&bp, "kind"), format!("unknown endpoint kind {k:?}")),
            _ => {}
        }
        if let Some(z) = &zone {
            check_zone(d, ctx, &join(&bp, "zone"), z);
        }
        out.push(Binding { endpoint: EndpointRef { kind, value }, zone });
    }
    Some(out)
}

fn decode_clause(d: &mut Decoder, ctx: &NetworkContext, v: &Value, path: &str) -> Option<ResolvedClause> {
    let obj = d.object(v, path)?;
    d.reject_unknown(obj, path, CLAUSE_KEYS);
    let action = d.req_str(obj, path, "action").map(|s| Action::from_text(&s));
    if let Some(Action::Other(a)) = &action {
        d.fail(join(path, "action"), format!("{a:?} is not allow or deny"));
    }
    let sources = decode_bindings(d, ctx, obj, path, "sources");
    let destinations = decode_bindings(d, ctx, obj, path, "destinations");
    let protocol = d.opt_str(obj, path, "protocol").map(|p| p.map(|s| Protocol::from_text(&s)));
    if let Some(Some(Protocol::Other(p))) = &protocol {
        d.fail(join(path, "protocol"), format!("{p:?} is not tcp, udp, icmp, or any"));
    }
    let ports = d.str_list(obj, path, "ports", false).map(|list| {
        let mut out = Vec::new();
        for (i, text) in list.iter().enumerate() {
            match parse_port_spec(text) {
                Ok(p) => out.push(p),
                Err(e) => d.fail(index(&join(path, "ports"), i), e.to_string()),
            }
        }
        out
    });
    let service = d.opt_str(obj, path, "service");
    if let Some(Some(s)) = &service {
        if !ctx.services.contains_key(s) {
            d.fail(join(path, "service"), format!("service {s:?} is not defined in context {}", ctx.id));
        }
    }
    let direction = d.req_str(obj, path, "direction").map(|s| Direction::from_text(&s));
    if let Some(Direction::Other(x)) = &direction {
        d.fail(join(path, "direction"), format!("{x:?} is not inbound, outbound, or any"));
    }
    let schedule = match obj.get("schedule") {
        None | Some(Value::Null) => Some(None),
        Some(w) => {
            let sp = join(path, "schedule");
            let w = decode_window_value(d, w, &sp, true);
            if let Some(w) = &w {
                for v in w.violations() {
                    d.fail(&sp, v);
                }
            }
            w.map(Some)
        }
    };
    let unresolved = d.str_list(obj, path, "unresolved", false);
    let notes = d.str_list(obj, path, "notes", false);
    let text = d.opt_str(obj, path, "text").map(Option::unwrap_or_default);
    Some(ResolvedClause {
        action: action?,
        sources: sources?,
        destinations: destinations?,
        protocol: protocol?,
        ports: ports?,
        service: service?,
        direction: direction?,
        schedule: schedule?,
        unresolved: unresolved?,
        notes: notes?,
        text: text?,
    })
}

/// Decodes and checks a resolved-intent document against `ctx`: every enum
/// must be known and every binding must name a context entity.
pub fn intent_from_value(value: &Value, ctx: &NetworkContext) -> Result<ResolvedIntent, Vec<FieldError>> {
    let mut d = Decoder::new();
    let Some(top) = d.object(value, "$") else {
        return Err(d.errors);
    };
    d.reject_unknown(top, "", &["context_id", "clauses"]);
    let context_id = d.req_str(top, "", "context_id");
    if let Some(id) = &context_id {
        if id != &ctx.id {
            d.fail("context_id", format!("expected {:?}, found {id:?}", ctx.id));
        }
    }
    let mut clauses = Vec::new();
    if let Some(arr) = d.req_array(top, "", "clauses") {
        for (i, v) in arr.iter().enumerate() {
            if let Some(c) = decode_clause(&mut d, ctx, v, &index("clauses", i)) {
                clauses.push(c);
            }
        }
    }
    d.finish()?;
    Ok(ResolvedIntent { context_id: context_id.unwrap_or_default(), clauses })
}
