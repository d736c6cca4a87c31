//! Static checks over compiled configuration text.
//!
//! The compiled lines are prefixed with a synthetic device header built from
//! the context, parsed line by line, and checked for parse issues, undefined
//! references and unused structures. Results are advisory.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::apps::is_builtin_app_name;
use crate::context::{AddressKind, NetworkContext};
use crate::findings::Finding;
use crate::ir::{parse_clock, parse_port_spec, Weekday};
use crate::net::{is_fqdn, Cidr};

pub const HOSTNAME: &str = "synth-fw";
pub const VIRTUAL_ROUTER: &str = "vr-default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Address,
    Service,
    Schedule,
    Zone,
    Interface,
    Application,
}

impl Category {
    fn as_str(self) -> &'static str {
        match self {
            Category::Address => "address",
            Category::Service => "service",
            Category::Schedule => "schedule",
            Category::Zone => "zone",
            Category::Interface => "interface",
            Category::Application => "application",
        }
    }

    /// Whether an unreferenced definition deserves a warning.
    fn tracks_use(self) -> bool {
        matches!(self, Category::Address | Category::Service | Category::Schedule)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTables {
    /// Name to first defining line (1-based).
    pub defined: BTreeMap<Category, BTreeMap<String, usize>>,
    pub referenced: BTreeMap<Category, BTreeMap<String, Vec<usize>>>,
    pub parse_findings: Vec<Finding>,
}

impl SymbolTables {
    fn define(&mut self, cat: Category, name: &str, line: usize) {
        self.defined.entry(cat).or_default().entry(name.to_string()).or_insert(line);
    }

    fn reference(&mut self, cat: Category, name: &str, line: usize) {
        self.referenced.entry(cat).or_default().entry(name.to_string()).or_default().push(line);
    }

    pub fn is_defined(&self, cat: Category, name: &str) -> bool {
        self.defined.get(&cat).is_some_and(|m| m.contains_key(name))
    }

    pub fn references(&self, cat: Category, name: &str) -> &[usize] {
        self.referenced.get(&cat).and_then(|m| m.get(name)).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Device preamble: hostname, one interface per zone, the virtual router,
/// zone bindings and every context address object.
pub fn synth_header(ctx: &NetworkContext) -> Vec<String> {
    let mut lines = vec![format!("set deviceconfig system hostname {HOSTNAME}")];
    let zones: Vec<(usize, &str)> = ctx.zones.keys().enumerate().map(|(i, z)| (i + 1, z.as_str())).collect();
    for (k, _) in &zones {
        lines.push(format!("set network interface ethernet ethernet1/{k} layer3 ip 10.255.{k}.1/24"));
    }
    for (k, _) in &zones {
        lines.push(format!("set network virtual-router {VIRTUAL_ROUTER} interface ethernet1/{k}"));
    }
    for (k, z) in &zones {
        lines.push(format!("set zone {z} network layer3 ethernet1/{k}"));
    }
    for o in ctx.objects.values() {
        lines.push(match o.kind {
            AddressKind::Host => format!("set address {} ip-netmask {}/32", o.name, o.value),
            AddressKind::Subnet => format!("set address {} ip-netmask {}", o.name, o.value),
            AddressKind::Fqdn => format!("set address {} fqdn {}", o.name, o.value),
        });
    }
    lines
}

fn is_clock_span(text: &str) -> bool {
    let Some((a, b)) = text.split_once('-') else { return false };
    matches!((parse_clock(a), parse_clock(b)), (Some(s), Some(e)) if s < e)
}

fn is_day(text: &str) -> bool {
    Weekday::ALL.iter().any(|d| d.as_str() == text)
}

/// Classifies one line; `Err` carries the parse complaint.
fn parse_line(t: &mut SymbolTables, tok: &[&str], n: usize) -> Result<(), &'static str> {
    use Category::*;
    match tok {
        ["set", "deviceconfig", "system", "hostname", _] => Ok(()),
        ["set", "network", "interface", "ethernet", ifname, "layer3", "ip", addr] => {
            Cidr::parse(addr).ok_or("interface address is not a CIDR")?;
            t.define(Interface, ifname, n);
            Ok(())
        }
        ["set", "network", "virtual-router", _, "interface", ifname] => {
            t.reference(Interface, ifname, n);
            Ok(())
        }
        ["set", "zone", zone, "network", "layer3", ifname] => {
            t.define(Zone, zone, n);
            t.reference(Interface, ifname, n);
            Ok(())
        }
        ["set", "address", name, "ip-netmask", addr] => {
            Cidr::parse(addr).ok_or("ip-netmask value is not a CIDR")?;
            t.define(Address, name, n);
            Ok(())
        }
        ["set", "address", name, "fqdn", host] => {
            if !is_fqdn(host) {
                return Err("fqdn value is not a domain name");
            }
            t.define(Address, name, n);
            Ok(())
        }
        ["set", "service", name, "protocol", "tcp" | "udp", "port", port] => {
            parse_port_spec(port).map_err(|_| "service port is not N or N-M")?;
            t.define(Service, name, n);
            Ok(())
        }
        ["set", "schedule", name, "recurring", "weekly", day, span] => {
            if !is_day(day) {
                return Err("schedule day is not a weekday name");
            }
            if !is_clock_span(span) {
                return Err("schedule span is not HH:MM-HH:MM");
            }
            t.define(Schedule, name, n);
            Ok(())
        }
        ["set", "rulebase", "security", "rules", _id, attr, value] => match *attr {
            "from" | "to" => {
                if *value != "any" {
                    t.reference(Zone, value, n);
                }
                Ok(())
            }
            "source" | "destination" => {
                if *value != "any" {
                    t.reference(Address, value, n);
                }
                Ok(())
            }
            "application" => {
                if *value != "any" {
                    t.reference(Application, value, n);
                }
                Ok(())
            }
            "service" => {
                if *value != "any" && *value != "application-default" {
                    t.reference(Service, value, n);
                }
                Ok(())
            }
            "action" if matches!(*value, "allow" | "deny") => Ok(()),
            "log-end" if matches!(*value, "yes" | "no") => Ok(()),
            "schedule" => {
                t.reference(Schedule, value, n);
                Ok(())
            }
            _ => Err("unknown or malformed rule attribute"),
        },
        _ => Err("line matches no grammar production"),
    }
}

/// Parses every line; never aborts. Blank lines are skipped.
pub fn parse_cli<S: AsRef<str>>(lines: &[S]) -> SymbolTables {
    let mut t = SymbolTables::default();
    for (i, line) in lines.iter().enumerate() {
        let line = line.as_ref();
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split(' ').collect();
        let verdict = if tok.iter().any(|s| s.is_empty() || s.contains(char::is_whitespace)) {
            Err("irregular whitespace")
        } else {
            parse_line(&mut t, &tok, n)
        };
        if let Err(why) = verdict {
            t.parse_findings.push(Finding::new("E-VFY-PARSE", format!("line {n}: {why}: {line:?}")).at_line(n));
        }
    }
    t
}

/// Header + config, then parse issues, undefined references and unused structures.
pub fn verify<S: AsRef<str>, H: AsRef<str>>(config_lines: &[S], header_lines: &[H]) -> Vec<Finding> {
    let all: Vec<&str> = header_lines.iter().map(AsRef::as_ref).chain(config_lines.iter().map(AsRef::as_ref)).collect();
    let mut t = parse_cli(&all);
    let mut out = std::mem::take(&mut t.parse_findings);

    for (cat, refs) in &t.referenced {
        for (name, lines) in refs {
            let known = t.is_defined(*cat, name) || (*cat == Category::Application && is_builtin_app_name(name));
            if !known {
                out.push(
                    Finding::new("E-VFY-UNDEF", format!("{cat} {name} is referenced but never defined"))
                        .with_subject(name.clone())
                        .at_line(lines[0]),
                );
            }
        }
    }
    for (cat, defs) in t.defined.iter().filter(|(c, _)| c.tracks_use()) {
        for (name, line) in defs {
            if t.references(*cat, name).is_empty() {
                out.push(
                    Finding::new("W-VFY-UNUSED", format!("{cat} {name} is defined but never referenced"))
                        .with_subject(name.clone())
                        .at_line(*line),
                );
            }
        }
    }
    out
}
