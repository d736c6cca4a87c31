//! Diagnostics shared by every validation layer, plus the registered code catalog.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

/// The layer that produced a finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Schema,
    Context,
    Intent,
    Agent,
    GeneralLinter,
    VendorLinter,
    SafetyGate,
    Compiler,
    Verifier,
    Harness,
}

impl Layer {
    /// Linters are advisory; they must never carry error severity.
    pub fn is_advisory(self) -> bool {
        matches!(self, Layer::GeneralLinter | Layer::VendorLinter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    pub message: String,
    pub layer: Layer,
    /// Entity the finding is about (object, field path, or line token).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    /// 1-based line number, for findings raised over configuration text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

impl Finding {
    /// Builds a finding for a registered code; severity and layer come from the catalog.
    ///
    /// Panics if `code` is not registered, which is a programming error.
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        let entry = lookup_code(code).unwrap_or_else(|| panic!("unregistered finding code {code}"));
        Finding {
            code: entry.code.to_string(),
            severity: entry.severity,
            rule_id: None,
            message: message.into(),
            layer: entry.layer,
            subject: None,
            line: None,
        }
    }

    pub fn for_rule(mut self, rule_id: impl Into<String>) -> Self {
        self.rule_id = Some(rule_id.into());
        self
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev} {}", self.code)?;
        if let Some(rule) = &self.rule_id {
            write!(f, " [{rule}]")?;
        }
        if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub code: &'static str,
    pub severity: Severity,
    pub layer: Layer,
    pub summary: &'static str,
}

const fn entry(code: &'static str, severity: Severity, layer: Layer, summary: &'static str) -> CatalogEntry {
    CatalogEntry { code, severity, layer, summary }
}

use Layer as L;
use Severity::{Error as E, Warning as W};

/// Every finding code the system can emit. Codes are stable.
pub static CATALOG: &[CatalogEntry] = &[
    entry("SCHEMA_EMPTY_POLICY", W, L::Schema, "policy has no rules"),
    entry("SCHEMA_BAD_ID", W, L::Schema, "rule id does not match [A-Za-z0-9_-]{1,63}"),
    entry("SCHEMA_DUP_ID", W, L::Schema, "rule id used by more than one rule"),
    entry("SCHEMA_BAD_ENUM", W, L::Schema, "enum field holds an unknown value"),
    entry("SCHEMA_MISSING_PROTOCOL", W, L::Schema, "rule has no protocol"),
    entry("SCHEMA_PORT_RANGE", W, L::Schema, "port spec outside 1..=65535 or lo > hi"),
    entry("SCHEMA_PORTS_FORBIDDEN", W, L::Schema, "ports present under protocol icmp or any"),
    entry("SCHEMA_BAD_CIDR", W, L::Schema, "cidr endpoint is not a valid IPv4 CIDR"),
    entry("SCHEMA_EMPTY_OBJECT", W, L::Schema, "object endpoint with empty name"),
    entry("SCHEMA_PRIORITY_RANGE", W, L::Schema, "priority outside 1..=65535"),
    entry("SCHEMA_BAD_SCHEDULE", W, L::Schema, "time window violates its invariants"),
    entry("SCHEMA_DECODE", E, L::Schema, "IR document is malformed or has mistyped fields"),
    entry("CTX_SYNTAX", E, L::Context, "context document is not valid JSON"),
    entry("CTX_SCHEMA", E, L::Context, "context document field is missing or mistyped"),
    entry("CTX_BAD_NAME", E, L::Context, "entity name does not match [A-Za-z0-9_-]{1,63}"),
    entry("CTX_BAD_VALUE", E, L::Context, "address object value does not parse for its kind"),
    entry("CTX_DANGLING_ZONE", E, L::Context, "address object references an undefined zone"),
    entry("CTX_NAME_COLLISION", E, L::Context, "name used in more than one category"),
    entry("CTX_NOT_FOUND", E, L::Context, "no stored context with this id"),
    entry("CTX_STORE_IO", E, L::Context, "context store could not be read or written"),
    entry("INTENT_PARSE", E, L::Intent, "request is outside the controlled grammar"),
    entry("INTENT_UNRESOLVED", W, L::Intent, "phrase did not resolve to a unique context entity"),
    entry("INTENT_EMPTY", E, L::Intent, "resolved intent has no clauses"),
    entry("AGENT_SCHEMA_VIOLATION", E, L::Agent, "agent output failed schema validation"),
    entry("AGENT_TRANSPORT", E, L::Agent, "agent endpoint could not be reached"),
    entry("AGENT_UNCONFIGURED", E, L::Agent, "agent backend selected without an endpoint"),
    entry("W-GEN-01", W, L::GeneralLinter, "empty source list"),
    entry("W-GEN-02", W, L::GeneralLinter, "empty destination list"),
    entry("W-GEN-03", W, L::GeneralLinter, "duplicate rule identifier"),
    entry("W-GEN-04", W, L::GeneralLinter, "invalid port range"),
    entry("W-GEN-05", W, L::GeneralLinter, "ports given under protocol icmp or any"),
    entry("W-GEN-06", W, L::GeneralLinter, "priority outside 1..=65535"),
    entry("W-GEN-07", W, L::GeneralLinter, "unsupported action"),
    entry("W-PAN-01", W, L::VendorLinter, "protocol not supported by PAN-OS backend"),
    entry("W-PAN-02", W, L::VendorLinter, "missing source or destination zones"),
    entry("W-PAN-03", W, L::VendorLinter, "schedule name has invalid characters or exceeds 31"),
    entry("W-PAN-04", W, L::VendorLinter, "schedule attached to a deny rule"),
    entry("W-PAN-05", W, L::VendorLinter, "custom service object required"),
    entry("W-PAN-06", W, L::VendorLinter, "direction conflicts with trust zone placement"),
    entry("W-PAN-07", W, L::VendorLinter, "same endpoint in sources and destinations"),
    entry("E-SG-01", E, L::SafetyGate, "allow rule from any source to any destination"),
    entry("E-SG-02", E, L::SafetyGate, "missing source or destination zones"),
    entry("E-SG-03", E, L::SafetyGate, "empty source or destination list"),
    entry("E-SG-04", E, L::SafetyGate, "missing protocol"),
    entry("E-CMP-UNMAPPED", E, L::Compiler, "IR field has no PAN-OS mapping"),
    entry("E-VFY-PARSE", E, L::Verifier, "configuration line matches no grammar production"),
    entry("E-VFY-UNDEF", E, L::Verifier, "reference to an undefined structure"),
    entry("W-VFY-UNUSED", W, L::Verifier, "structure defined but never referenced"),
    entry("TPL_SYNTAX", E, L::Harness, "triplet file is not valid JSON"),
    entry("TPL_MISSING_FIELD", E, L::Harness, "triplet case lacks a required field"),
    entry("TPL_BAD_IR", E, L::Harness, "expected IR does not decode or validate"),
    entry("TPL_UNKNOWN_CONTEXT", E, L::Harness, "triplet references an unknown context"),
];

pub fn lookup_code(code: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.code == code)
}

/// Machine-readable catalog document, as published in `docs/findings.json`.
pub fn catalog_document() -> serde_json::Value {
    serde_json::to_value(CATALOG).expect("catalog serializes")
}
