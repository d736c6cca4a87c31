//! Vendor-agnostic rule representation.
//!
//! An [`IrPolicy`] is what the intent engine produces and what every later
//! stage consumes. Decoded documents may violate the type invariants (agent
//! output is untrusted), so enum fields keep unknown values in an `Other`
//! variant and numeric fields are wide enough to hold out-of-range input;
//! [`validate_policy`] reports every such violation.

mod canon;
mod codec;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use canon::canonicalize;
pub use codec::{
    decode_policy, encode_policy, encode_policy_pretty, policy_from_value, policy_to_value, DecodeError,
};
pub use validate::validate_policy;
pub(crate) use codec::{decode_window as decode_window_value, window_to_value as codec_window_to_value};

pub const MIN_PRIORITY: i64 = 1;
pub const MAX_PRIORITY: i64 = 65535;
pub const DEFAULT_PRIORITY: i64 = 100;

macro_rules! open_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant,)+
            /// A value outside the schema, kept verbatim for diagnostics.
            Other(String),
        }

        impl $name {
            pub const KNOWN: &'static [&'static str] = &[$($text),+];

            pub fn as_str(&self) -> &str {
                match self {
                    $(Self::$variant => $text,)+
                    Self::Other(s) => s,
                }
            }

            /// Case-insensitive for known values; anything else lands in `Other`.
            pub fn from_text(text: &str) -> Self {
                $(if text.eq_ignore_ascii_case($text) { return Self::$variant; })+
                Self::Other(text.to_string())
            }

            pub fn is_known(&self) -> bool {
                !matches!(self, Self::Other(_))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                Ok(Self::from_text(&text))
            }
        }
    };
}

open_enum!(Action { Allow => "allow", Deny => "deny" });
open_enum!(Protocol { Tcp => "tcp", Udp => "udp", Icmp => "icmp", Any => "any" });
open_enum!(Direction { Inbound => "inbound", Outbound => "outbound", Any => "any" });
open_enum!(EndpointKind { Object => "object", Cidr => "cidr", Any => "any" });

impl Protocol {
    /// Protocols that carry port numbers.
    pub fn has_ports(&self) -> bool {
        matches!(self, Protocol::Tcp | Protocol::Udp)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortError {
    #[error("PORT_MALFORMED: malformed port token {0:?}")]
    Malformed(String),
    #[error("PORT_OUT_OF_RANGE: port token {0:?} outside 1-65535")]
    OutOfRange(String),
    #[error("PORT_REVERSED: range {0:?} has lo > hi")]
    Reversed(String),
}

impl PortError {
    pub fn code(&self) -> &'static str {
        match self {
            PortError::Malformed(_) => "PORT_MALFORMED",
            PortError::OutOfRange(_) => "PORT_OUT_OF_RANGE",
            PortError::Reversed(_) => "PORT_REVERSED",
        }
    }
}

/// Inclusive port range. A single port has `lo == hi`.
///
/// Fields are wider than a port number so decoded documents can carry
/// out-of-range values to the validators; [`PortSpec::new`] and
/// [`parse_port_spec`] enforce `1 <= lo <= hi <= 65535`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortSpec {
    pub lo: u32,
    pub hi: u32,
}

impl PortSpec {
    pub fn new(lo: u32, hi: u32) -> Result<PortSpec, PortError> {
        let spec = PortSpec { lo, hi };
        if !(1..=65535).contains(&lo) || !(1..=65535).contains(&hi) {
            return Err(PortError::OutOfRange(spec.to_string()));
        }
        if lo > hi {
            return Err(PortError::Reversed(spec.to_string()));
        }
        Ok(spec)
    }

    pub fn single(port: u16) -> PortSpec {
        PortSpec { lo: u32::from(port.max(1)), hi: u32::from(port.max(1)) }
    }

    pub fn is_valid(&self) -> bool {
        PortSpec::new(self.lo, self.hi).is_ok()
    }

    pub fn is_single(&self) -> bool {
        self.lo == self.hi
    }

    /// Shape-only parse: accepts `N` or `N-M` with any decimal magnitude that fits `u32`.
    pub(crate) fn parse_shape(text: &str) -> Option<PortSpec> {
        fn num(t: &str) -> Option<u32> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            t.parse().ok()
        }
        match text.split_once('-') {
            None => num(text).map(|n| PortSpec { lo: n, hi: n }),
            Some((a, b)) => Some(PortSpec { lo: num(a)?, hi: num(b)? }),
        }
    }
}

impl fmt::Display for PortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}-{}", self.lo, self.hi)
        }
    }
}

impl FromStr for PortSpec {
    type Err = PortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_port_spec(s)
    }
}

impl Serialize for PortSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PortSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_port_spec(&text).map_err(serde::de::Error::custom)
    }
}

/// Parses `"N"` or `"N-M"` with the port invariants enforced.
pub fn parse_port_spec(text: &str) -> Result<PortSpec, PortError> {
    let number = |tok: &str| -> Result<u32, PortError> {
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(PortError::Malformed(tok.to_string()));
        }
        match tok.parse::<u32>() {
            Ok(n) if (1..=65535).contains(&n) => Ok(n),
            _ => Err(PortError::OutOfRange(tok.to_string())),
        }
    };
    let text = text.trim();
    match text.split_once('-') {
        None => {
            let n = number(text)?;
            Ok(PortSpec { lo: n, hi: n })
        }
        Some((a, b)) => {
            let (lo, hi) = (number(a)?, number(b)?);
            if lo > hi {
                return Err(PortError::Reversed(text.to_string()));
            }
            Ok(PortSpec { lo, hi })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weekday {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
    Sunday,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Monday,
        Weekday::Tuesday,
        Weekday::Wednesday,
        Weekday::Thursday,
        Weekday::Friday,
        Weekday::Saturday,
        Weekday::Sunday,
    ];

    pub const WORKWEEK: [Weekday; 5] =
        [Weekday::Monday, Weekday::Tuesday, Weekday::Wednesday, Weekday::Thursday, Weekday::Friday];

    pub fn as_str(self) -> &'static str {
        match self {
            Weekday::Monday => "monday",
            Weekday::Tuesday => "tuesday",
            Weekday::Wednesday => "wednesday",
            Weekday::Thursday => "thursday",
            Weekday::Friday => "friday",
            Weekday::Saturday => "saturday",
            Weekday::Sunday => "sunday",
        }
    }

    pub fn abbrev(self) -> &'static str {
        &self.as_str()[..3]
    }

    /// Accepts full names and three-letter abbreviations, any case.
    pub fn parse(text: &str) -> Option<Weekday> {
        let lower = text.to_ascii_lowercase();
        Weekday::ALL.into_iter().find(|d| d.as_str() == lower || d.abbrev() == lower)
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const MINUTES_PER_DAY: u32 = 1440;

/// `HH:MM` for a minutes-from-midnight value; 1440 renders as `24:00`.
pub fn format_clock(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// Parses `HH:MM` into minutes from midnight. `24:00` is the only value above 23:59.
pub fn parse_clock(text: &str) -> Option<u32> {
    let (h, m) = text.split_once(':')?;
    if h.len() != 2 || m.len() != 2 || !h.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
    if m > 59 || h > 24 || (h == 24 && m != 0) {
        return None;
    }
    Some(h * 60 + m)
}

/// A named recurring weekly time window. `start < end`, no overnight windows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeWindow {
    pub name: String,
    pub days: Vec<Weekday>,
    pub start: u32,
    pub end: u32,
}

impl TimeWindow {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.name.is_empty() {
            out.push("empty name".to_string());
        }
        if self.days.is_empty() {
            out.push("empty day set".to_string());
        }
        if self.start >= MINUTES_PER_DAY {
            out.push(format!("start {} past 23:59", format_clock(self.start)));
        }
        if self.end == 0 || self.end > MINUTES_PER_DAY {
            out.push(format!("end {} outside 00:01-24:00", format_clock(self.end)));
        }
        if self.start >= self.end {
            out.push(format!("start {} not before end {}", format_clock(self.start), format_clock(self.end)));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// Days in Monday-first order without duplicates.
    pub fn ordered_days(&self) -> Vec<Weekday> {
        let mut days = self.days.clone();
        days.sort();
        days.dedup();
        days
    }

    pub fn same_window(&self, other: &TimeWindow) -> bool {
        self.ordered_days() == other.ordered_days() && self.start == other.start && self.end == other.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointRef {
    pub kind: EndpointKind,
    pub value: String,
}

impl EndpointRef {
    pub fn any() -> Self {
        EndpointRef { kind: EndpointKind::Any, value: String::new() }
    }

    pub fn object(name: impl Into<String>) -> Self {
        EndpointRef { kind: EndpointKind::Object, value: name.into() }
    }

    pub fn cidr(text: impl Into<String>) -> Self {
        EndpointRef { kind: EndpointKind::Cidr, value: text.into() }
    }

    /// `any`, or a CIDR covering the whole IPv4 space.
    pub fn is_any_equivalent(&self) -> bool {
        match self.kind {
            EndpointKind::Any => true,
            EndpointKind::Cidr => crate::net::Cidr::parse(&self.value).is_some_and(|c| c.is_default_route()),
            _ => false,
        }
    }
}

impl fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EndpointKind::Any => f.write_str("any"),
            _ => f.write_str(&self.value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrRule {
    pub id: String,
    pub name: String,
    pub action: Action,
    /// `None` when the document omitted the protocol; the Safety Gate rejects that.
    pub protocol: Option<Protocol>,
    pub sources: Vec<EndpointRef>,
    pub destinations: Vec<EndpointRef>,
    pub source_zones: Vec<String>,
    pub destination_zones: Vec<String>,
    pub ports: Option<Vec<PortSpec>>,
    pub application: Option<String>,
    pub direction: Direction,
    pub priority: i64,
    pub logging: bool,
    pub schedule: Option<TimeWindow>,
    pub raw_policy: String,
    pub ambiguities: Vec<String>,
}

impl IrRule {
    /// A rule with defaults for everything but identity, action, and protocol.
    pub fn new(id: impl Into<String>, action: Action, protocol: Protocol) -> Self {
        let id = id.into();
        IrRule {
            name: id.clone(),
            id,
            action,
            protocol: Some(protocol),
            sources: Vec::new(),
            destinations: Vec::new(),
            source_zones: Vec::new(),
            destination_zones: Vec::new(),
            ports: None,
            application: None,
            direction: Direction::Any,
            priority: DEFAULT_PRIORITY,
            logging: true,
            schedule: None,
            raw_policy: String::new(),
            ambiguities: Vec::new(),
        }
    }

    /// Port list, treating an absent list as empty.
    pub fn port_list(&self) -> &[PortSpec] {
        self.ports.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrPolicy {
    pub context_id: String,
    pub rules: Vec<IrRule>,
}

impl IrPolicy {
    pub fn new(context_id: impl Into<String>, rules: Vec<IrRule>) -> Self {
        IrPolicy { context_id: context_id.into(), rules }
    }

    pub fn rule(&self, id: &str) -> Option<&IrRule> {
        self.rules.iter().find(|r| r.id == id)
    }
}
