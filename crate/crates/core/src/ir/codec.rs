use std::fmt;

use serde_json::{json, Map, Value};

use super::{
    format_clock, parse_clock, Action, Direction, EndpointKind, EndpointRef, IrPolicy, IrRule, PortSpec, Protocol,
    TimeWindow, Weekday,
};
use crate::doc::{index, join, parse_json, Decoder, FieldError, SyntaxError};
use crate::json::canonical_string;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    Syntax(SyntaxError),
    Schema(Vec<FieldError>),
}

impl DecodeError {
    pub fn fields(&self) -> &[FieldError] {
        match self {
            DecodeError::Schema(f) => f,
            DecodeError::Syntax(_) => &[],
        }
    }
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::Syntax(e) => e.fmt(f),
            DecodeError::Schema(errors) => {
                write!(f, "schema error")?;
                for (i, e) in errors.iter().enumerate() {
                    write!(f, "{} {e}", if i == 0 { ":" } else { ";" })?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for DecodeError {}

pub(crate) fn endpoint_to_value(e: &EndpointRef) -> Value {
    json!({ "kind": e.kind.as_str(), "value": e.value })
}

pub(crate) fn window_to_value(w: &TimeWindow) -> Value {
    json!({
        "name": w.name,
        "days": w.days.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
        "start": format_clock(w.start),
        "end": format_clock(w.end),
    })
}

fn rule_to_value(r: &IrRule) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), json!(r.id));
    m.insert("name".into(), json!(r.name));
    m.insert("action".into(), json!(r.action.as_str()));
    if let Some(p) = &r.protocol {
        m.insert("protocol".into(), json!(p.as_str()));
    }
    m.insert("sources".into(), Value::Array(r.sources.iter().map(endpoint_to_value).collect()));
    m.insert("destinations".into(), Value::Array(r.destinations.iter().map(endpoint_to_value).collect()));
    m.insert("source_zones".into(), json!(r.source_zones));
    m.insert("destination_zones".into(), json!(r.destination_zones));
    if let Some(ports) = &r.ports {
        m.insert("ports".into(), Value::Array(ports.iter().map(|p| json!(p.to_string())).collect()));
    }
    if let Some(app) = &r.application {
        m.insert("application".into(), json!(app));
    }
    m.insert("direction".into(), json!(r.direction.as_str()));
    m.insert("priority".into(), json!(r.priority));
    m.insert("logging".into(), json!(r.logging));
    if let Some(w) = &r.schedule {
        m.insert("schedule".into(), window_to_value(w));
    }
    m.insert("raw_policy".into(), json!(r.raw_policy));
    m.insert("ambiguities".into(), json!(r.ambiguities));
    Value::Object(m)
}

pub fn policy_to_value(p: &IrPolicy) -> Value {
    json!({
        "context_id": p.context_id,
        "rules": p.rules.iter().map(rule_to_value).collect::<Vec<_>>(),
    })
}

/// Canonical encoding: sorted keys, no insignificant whitespace.
pub fn encode_policy(p: &IrPolicy) -> String {
    canonical_string(&policy_to_value(p))
}

pub fn encode_policy_pretty(p: &IrPolicy) -> String {
    serde_json::to_string_pretty(&crate::json::sorted(&policy_to_value(p))).expect("IR serializes")
}

pub fn decode_policy(bytes: &[u8]) -> Result<IrPolicy, DecodeError> {
    let value = parse_json(bytes).map_err(DecodeError::Syntax)?;
    policy_from_value(&value)
}

const RULE_KEYS: &[&str] = &[
    "id",
    "name",
    "action",
    "protocol",
    "sources",
    "destinations",
    "source_zones",
    "destination_zones",
    "ports",
    "application",
    "direction",
    "priority",
    "logging",
    "schedule",
    "raw_policy",
    "ambiguities",
];

pub fn policy_from_value(value: &Value) -> Result<IrPolicy, DecodeError> {
    let mut d = Decoder::new();
    let Some(top) = d.object(value, "$") else {
        return Err(DecodeError::Schema(d.errors));
    };
    d.reject_unknown(top, "", &["context_id", "rules"]);
    let context_id = d.req_str(top, "", "context_id");
    let mut rules = Vec::new();
    if let Some(arr) = d.req_array(top, "", "rules") {
        for (i, v) in arr.iter().enumerate() {
            if let Some(rule) = decode_rule(&mut d, v, &index("rules", i)) {
                rules.push(rule);
            }
        }
    }
    d.finish().map_err(DecodeError::Schema)?;
    Ok(IrPolicy { context_id: context_id.expect("checked"), rules })
}

fn decode_endpoints(d: &mut Decoder, obj: &Map<String, Value>, path: &str, key: &str) -> Option<Vec<EndpointRef>> {
    let arr = d.req_array(obj, path, key)?;
    let p = join(path, key);
    let mut out = Vec::new();
    let mut ok = true;
    for (i, v) in arr.iter().enumerate() {
        let ep_path = index(&p, i);
        let Some(ep) = d.object(v, &ep_path) else {
            ok = false;
            continue;
        };
        d.reject_unknown(ep, &ep_path, &["kind", "value"]);
        let kind = d.req_str(ep, &ep_path, "kind");
        let value = d.opt_str(ep, &ep_path, "value");
        match (kind, value) {
            (Some(kind), Some(value)) => {
                out.push(EndpointRef { kind: EndpointKind::from_text(&kind), value: value.unwrap_or_default() })
            }
            _ => ok = false,
        }
    }
    ok.then_some(out)
}

pub(crate) fn decode_window(d: &mut Decoder, v: &Value, path: &str, name_required: bool) -> Option<TimeWindow> {
    let obj = d.object(v, path)?;
    d.reject_unknown(obj, path, &["name", "days", "start", "end"]);
    let name = if name_required { d.req_str(obj, path, "name") } else { d.opt_str(obj, path, "name").map(Option::unwrap_or_default) };
    let days = d.str_list(obj, path, "days", true).and_then(|days| {
        let mut out = Vec::new();
        for (i, text) in days.iter().enumerate() {
            match Weekday::parse(text) {
                Some(day) if text.eq_ignore_ascii_case(day.as_str()) => out.push(day),
                _ => {
                    d.fail(index(&join(path, "days"), i), format!("unknown weekday {text:?}"));
                    return None;
                }
            }
        }
        Some(out)
    });
    let mut clock = |key: &str| -> Option<u32> {
        let text = d.req_str(obj, path, key)?;
        let parsed = parse_clock(&text);
        if parsed.is_none() {
            d.fail(join(path, key), format!("expected HH:MM, found {text:?}"));
        }
        parsed
    };
    let start = clock("start");
    let end = clock("end");
    Some(TimeWindow { name: name?, days: days?, start: start?, end: end? })
}

fn decode_rule(d: &mut Decoder, v: &Value, path: &str) -> Option<IrRule> {
    let obj = d.object(v, path)?;
    d.reject_unknown(obj, path, RULE_KEYS);
    let id = d.req_str(obj, path, "id");
    let name = d.req_str(obj, path, "name");
    let action = d.req_str(obj, path, "action").map(|s| Action::from_text(&s));
    let protocol = d.opt_str(obj, path, "protocol").map(|p| p.map(|s| Protocol::from_text(&s)));
    let sources = decode_endpoints(d, obj, path, "sources");
    let destinations = decode_endpoints(d, obj, path, "destinations");
    let source_zones = d.str_list(obj, path, "source_zones", true);
    let destination_zones = d.str_list(obj, path, "destination_zones", true);
    let ports = match d.opt_array(obj, path, "ports") {
        None => None,
        Some(None) => Some(None),
        Some(Some(arr)) => {
            let p = join(path, "ports");
            let mut out = Vec::new();
            let mut ok = true;
            for (i, item) in arr.iter().enumerate() {
                let item_path = index(&p, i);
                match d.as_str(item, &item_path) {
                    Some(text) => match PortSpec::parse_shape(&text) {
                        Some(spec) => out.push(spec),
                        None => {
                            d.fail(item_path, format!("malformed port spec {text:?}"));
                            ok = false;
                        }
                    },
                    None => ok = false,
                }
            }
            ok.then_some(Some(out))
        }
    };
    let application = d.opt_str(obj, path, "application");
    let direction = d.req_str(obj, path, "direction").map(|s| Direction::from_text(&s));
    let priority = d.req_i64(obj, path, "priority");
    let logging = d.req_bool(obj, path, "logging");
    let schedule = match obj.get("schedule") {
        None | Some(Value::Null) => Some(None),
        Some(w) => decode_window(d, w, &join(path, "schedule"), true).map(Some),
    };
    let raw_policy = d.opt_str(obj, path, "raw_policy").map(Option::unwrap_or_default);
    let ambiguities = d.str_list(obj, path, "ambiguities", false);
    Some(IrRule {
        id: id?,
        name: name?,
        action: action?,
        protocol: protocol?,
        sources: sources?,
        destinations: destinations?,
        source_zones: source_zones?,
        destination_zones: destination_zones?,
        ports: ports?,
        application: application?,
        direction: direction?,
        priority: priority?,
        logging: logging?,
        schedule: schedule?,
        raw_policy: raw_policy?,
        ambiguities: ambiguities?,
    })
}
