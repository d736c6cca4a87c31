//! Network contexts: the address objects, zones, services, and schedules that
//! natural-language phrases are grounded against.

mod lookup;
mod store;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::doc::{join, parse_json, Decoder, SyntaxError};
use crate::findings::Finding;
use crate::ir::{codec_window_to_value, decode_window_value, PortSpec, Protocol, TimeWindow};
use crate::json::{canonical_string, sha256_hex};
use crate::net::{is_fqdn, is_identifier, parse_host, Cidr};

pub use lookup::{lookup, normalize_phrase, Candidate, Category, MatchSet};
pub use store::{ContextStore, ContextSummary, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressKind {
    Host,
    Subnet,
    Fqdn,
}

impl AddressKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AddressKind::Host => "host",
            AddressKind::Subnet => "subnet",
            AddressKind::Fqdn => "fqdn",
        }
    }

    fn parse(text: &str) -> Option<AddressKind> {
        match text {
            "host" => Some(AddressKind::Host),
            "subnet" => Some(AddressKind::Subnet),
            "fqdn" => Some(AddressKind::Fqdn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressObject {
    pub name: String,
    pub kind: AddressKind,
    pub value: String,
    pub zone: Option<String>,
    pub aliases: Vec<String>,
}

impl AddressObject {
    /// Network covered by a host or subnet object; `None` for fqdn objects.
    pub fn network(&self) -> Option<Cidr> {
        match self.kind {
            AddressKind::Host => parse_host(&self.value).map(Cidr::host),
            AddressKind::Subnet => Cidr::parse(&self.value),
            AddressKind::Fqdn => None,
        }
    }
}

/// Zone trust levels, most trusted first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustLevel {
    Trust,
    Dmz,
    Guest,
    Untrust,
}

impl TrustLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            TrustLevel::Trust => "trust",
            TrustLevel::Dmz => "dmz",
            TrustLevel::Guest => "guest",
            TrustLevel::Untrust => "untrust",
        }
    }

    /// Larger is more trusted: trust > dmz > guest > untrust.
    pub fn rank(self) -> u8 {
        match self {
            TrustLevel::Trust => 3,
            TrustLevel::Dmz => 2,
            TrustLevel::Guest => 1,
            TrustLevel::Untrust => 0,
        }
    }

    fn parse(text: &str) -> Option<TrustLevel> {
        [TrustLevel::Trust, TrustLevel::Dmz, TrustLevel::Guest, TrustLevel::Untrust]
            .into_iter()
            .find(|t| t.as_str() == text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Zone {
    pub name: String,
    pub trust_level: TrustLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Service {
    pub name: String,
    pub protocol: Protocol,
    pub ports: Vec<PortSpec>,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkContext {
    pub id: String,
    pub title: String,
    pub objects: BTreeMap<String, AddressObject>,
    pub zones: BTreeMap<String, Zone>,
    pub services: BTreeMap<String, Service>,
    pub schedules: BTreeMap<String, TimeWindow>,
}

impl NetworkContext {
    pub fn zone_trust(&self, zone: &str) -> Option<TrustLevel> {
        self.zones.get(zone).map(|z| z.trust_level)
    }

    /// Zones at the untrust level, in name order.
    pub fn untrust_zones(&self) -> Vec<&str> {
        self.zones.values().filter(|z| z.trust_level == TrustLevel::Untrust).map(|z| z.name.as_str()).collect()
    }

    pub fn summary(&self) -> ContextSummary {
        ContextSummary {
            id: self.id.clone(),
            title: self.title.clone(),
            objects: self.objects.len(),
            zones: self.zones.len(),
            services: self.services.len(),
            schedules: self.schedules.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextError {
    Syntax(SyntaxError),
    Invalid(Vec<Finding>),
}

impl ContextError {
    pub fn findings(&self) -> Vec<Finding> {
        match self {
            ContextError::Syntax(e) => vec![Finding::new("CTX_SYNTAX", e.to_string())],
            ContextError::Invalid(f) => f.clone(),
        }
    }
}

impl fmt::Display for ContextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextError::Syntax(e) => e.fmt(f),
            ContextError::Invalid(findings) => {
                write!(f, "invalid context")?;
                for x in findings {
                    write!(f, "\n  {x}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ContextError {}

pub fn load_context(bytes: &[u8]) -> Result<NetworkContext, ContextError> {
    let value = parse_json(bytes).map_err(ContextError::Syntax)?;
    context_from_value(&value)
}

fn named_entries<'v>(d: &mut Decoder, top: &'v Map<String, Value>, key: &str) -> Vec<(&'v String, &'v Map<String, Value>)> {
    let obj = match top.get(key) {
        None | Some(Value::Null) => return Vec::new(),
        Some(v) => match d.object(v, key) {
            Some(o) => o,
            None => return Vec::new(),
        },
    };
    obj.iter().filter_map(|(name, v)| d.object(v, &join(key, name)).map(|o| (name, o))).collect()
}

pub fn context_from_value(value: &Value) -> Result<NetworkContext, ContextError> {
    let mut d = Decoder::new();
    let Some(top) = d.object(value, "$") else {
        return Err(schema_findings(d));
    };
    d.reject_unknown(top, "", &["id", "title", "zones", "objects", "services", "schedules"]);
    let id = d.opt_str(top, "", "id").flatten();
    let title = d.opt_str(top, "", "title").flatten();
    let mut ctx = NetworkContext::default();
    let mut findings = Vec::new();

    for (name, z) in named_entries(&mut d, top, "zones") {
        let path = join("zones", name);
        d.reject_unknown(z, &path, &["trust_level"]);
        if let Some(level) = d.req_str(z, &path, "trust_level") {
            match TrustLevel::parse(&level) {
                Some(trust_level) => {
                    ctx.zones.insert(name.clone(), Zone { name: name.clone(), trust_level });
                }
                None => d.fail(join(&path, "trust_level"), format!("unknown trust level {level:?}")),
            }
        }
    }

    for (name, o) in named_entries(&mut d, top, "objects") {
        let path = join("objects", name);
        d.reject_unknown(o, &path, &["kind", "value", "zone", "aliases"]);
        let kind = d.req_str(o, &path, "kind");
        let value = d.req_str(o, &path, "value");
        let zone = d.opt_str(o, &path, "zone");
        let aliases = d.str_list(o, &path, "aliases", false);
        let (Some(kind), Some(value), Some(zone), Some(aliases)) = (kind, value, zone, aliases) else {
            continue;
        };
        let Some(kind) = AddressKind::parse(&kind) else {
            d.fail(join(&path, "kind"), format!("unknown address kind {kind:?}"));
            continue;
        };
        let obj = AddressObject { name: name.clone(), kind, value, zone, aliases };
        let parses = match kind {
            AddressKind::Host => parse_host(&obj.value).is_some(),
            AddressKind::Subnet => Cidr::parse(&obj.value).is_some(),
            AddressKind::Fqdn => is_fqdn(&obj.value),
        };
        if !parses {
            findings.push(
                Finding::new("CTX_BAD_VALUE", format!("{:?} is not a valid {} value", obj.value, kind.as_str()))
                    .with_subject(name.clone()),
            );
        }
        ctx.objects.insert(name.clone(), obj);
    }

    for (name, s) in named_entries(&mut d, top, "services") {
        let path = join("services", name);
        d.reject_unknown(s, &path, &["protocol", "ports", "aliases"]);
        let protocol = d.req_str(s, &path, "protocol");
        let ports = d.str_list(s, &path, "ports", true);
        let aliases = d.str_list(s, &path, "aliases", false);
        let (Some(protocol), Some(ports), Some(aliases)) = (protocol, ports, aliases) else {
            continue;
        };
        let protocol = Protocol::from_text(&protocol);
        if !matches!(protocol, Protocol::Tcp | Protocol::Udp) {
            findings.push(
                Finding::new("CTX_BAD_VALUE", format!("service protocol {protocol} must be tcp or udp"))
                    .with_subject(name.clone()),
            );
        }
        if ports.is_empty() {
            findings.push(Finding::new("CTX_BAD_VALUE", "service needs at least one port").with_subject(name.clone()));
        }
        let mut specs = Vec::new();
        for text in &ports {
            match crate::ir::parse_port_spec(text) {
                Ok(p) => specs.push(p),
                Err(e) => findings.push(Finding::new("CTX_BAD_VALUE", e.to_string()).with_subject(name.clone())),
            }
        }
        ctx.services.insert(name.clone(), Service { name: name.clone(), protocol, ports: specs, aliases });
    }

    if let Some(v) = top.get("schedules").filter(|v| !v.is_null()) {
        if let Some(obj) = d.object(v, "schedules") {
            for (name, w) in obj {
                if let Some(mut window) = decode_window_value(&mut d, w, &join("schedules", name), false) {
                    window.name = name.clone();
                    for v in window.violations() {
                        findings.push(Finding::new("CTX_BAD_VALUE", format!("schedule: {v}")).with_subject(name.clone()));
                    }
                    ctx.schedules.insert(name.clone(), window);
                }
            }
        }
    }

    if !d.errors.is_empty() {
        let mut all: Vec<Finding> = d
            .errors
            .iter()
            .map(|e| Finding::new("CTX_SCHEMA", e.reason.clone()).with_subject(e.path.clone()))
            .collect();
        all.extend(findings);
        return Err(ContextError::Invalid(all));
    }

    check_names(&ctx, &mut findings);
    for obj in ctx.objects.values() {
        if let Some(zone) = &obj.zone {
            if !ctx.zones.contains_key(zone) {
                findings.push(
                    Finding::new("CTX_DANGLING_ZONE", format!("object {} references undefined zone {zone:?}", obj.name))
                        .with_subject(obj.name.clone()),
                );
            }
        }
    }

    ctx.title = title.clone().unwrap_or_default();
    ctx.id = match id {
        Some(id) => {
            if !is_identifier(&id) {
                findings.push(
                    Finding::new("CTX_BAD_NAME", format!("context id {id:?} must match [A-Za-z0-9_-]{{1,63}}"))
                        .with_subject("id"),
                );
            }
            id
        }
        None => {
            let digest = sha256_hex(canonical_string(&context_to_value(&ctx)).as_bytes());
            format!("ctx-{}", &digest[..16])
        }
    };
    if ctx.title.is_empty() {
        ctx.title = ctx.id.clone();
    }

    if findings.is_empty() {
        Ok(ctx)
    } else {
        Err(ContextError::Invalid(findings))
    }
}

fn schema_findings(d: Decoder) -> ContextError {
    ContextError::Invalid(
        d.errors.into_iter().map(|e| Finding::new("CTX_SCHEMA", e.reason).with_subject(e.path)).collect(),
    )
}

fn check_names(ctx: &NetworkContext, findings: &mut Vec<Finding>) {
    let mut seen: BTreeMap<String, (Category, &str)> = BTreeMap::new();
    let names = ctx
        .objects
        .keys()
        .map(|n| (Category::Object, n))
        .chain(ctx.zones.keys().map(|n| (Category::Zone, n)))
        .chain(ctx.services.keys().map(|n| (Category::Service, n)))
        .chain(ctx.schedules.keys().map(|n| (Category::Schedule, n)));
    for (cat, name) in names {
        if !is_identifier(name) {
            findings.push(
                Finding::new("CTX_BAD_NAME", format!("{} name {name:?} must match [A-Za-z0-9_-]{{1,63}}", cat.as_str()))
                    .with_subject(name.clone()),
            );
        }
        let folded = name.to_lowercase();
        if let Some((other_cat, other)) = seen.get(&folded) {
            findings.push(
                Finding::new(
                    "CTX_NAME_COLLISION",
                    format!("{} {name:?} collides with {} {other:?}", cat.as_str(), other_cat.as_str()),
                )
                .with_subject(name.clone()),
            );
        } else {
            seen.insert(folded, (cat, name));
        }
    }
}

pub fn context_to_value(ctx: &NetworkContext) -> Value {
    let zones: Map<String, Value> =
        ctx.zones.values().map(|z| (z.name.clone(), json!({ "trust_level": z.trust_level.as_str() }))).collect();
    let objects: Map<String, Value> = ctx
        .objects
        .values()
        .map(|o| {
            let mut m = Map::new();
            m.insert("kind".into(), json!(o.kind.as_str()));
            m.insert("value".into(), json!(o.value));
            if let Some(z) = &o.zone {
                m.insert("zone".into(), json!(z));
            }
            m.insert("aliases".into(), json!(o.aliases));
            (o.name.clone(), Value::Object(m))
        })
        .collect();
    let services: Map<String, Value> = ctx
        .services
        .values()
        .map(|s| {
            let ports: Vec<String> = s.ports.iter().map(|p| p.to_string()).collect();
            (s.name.clone(), json!({ "protocol": s.protocol.as_str(), "ports": ports, "aliases": s.aliases }))
        })
        .collect();
    let schedules: Map<String, Value> = ctx
        .schedules
        .iter()
        .map(|(name, w)| {
            let mut v = codec_window_to_value(w);
            if let Value::Object(m) = &mut v {
                m.remove("name");
            }
            (name.clone(), v)
        })
        .collect();
    let mut top = Map::new();
    if !ctx.id.is_empty() {
        top.insert("id".into(), json!(ctx.id));
    }
    if !ctx.title.is_empty() {
        top.insert("title".into(), json!(ctx.title));
    }
    top.insert("zones".into(), Value::Object(zones));
    top.insert("objects".into(), Value::Object(objects));
    top.insert("services".into(), Value::Object(services));
    top.insert("schedules".into(), Value::Object(schedules));
    Value::Object(top)
}

/// Canonical context document text.
pub fn encode_context(ctx: &NetworkContext) -> String {
    canonical_string(&context_to_value(ctx))
}
