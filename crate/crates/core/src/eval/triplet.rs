//! Triplet corpus loading.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::doc::parse_json;
use crate::findings::Finding;
use crate::ir::{policy_from_value, policy_to_value, validate_policy, IrPolicy};

/// A (query, expected IR, expected CLI) case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triplet {
    pub id: String,
    pub context_id: String,
    pub query: String,
    pub expected_ir: IrPolicy,
    /// Compiler output only; empty for cases expected to be blocked.
    pub expected_cli: String,
    pub expect_blocked: bool,
}

impl Triplet {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), json!(self.id));
        m.insert("context_id".into(), json!(self.context_id));
        m.insert("query".into(), json!(self.query));
        m.insert("expected_ir".into(), policy_to_value(&self.expected_ir));
        m.insert("expected_cli".into(), json!(self.expected_cli));
        if self.expect_blocked {
            m.insert("expect_blocked".into(), json!(true));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletSet {
    pub cases: Vec<Triplet>,
    /// Problems with individual cases; the valid cases are still returned.
    pub findings: Vec<Finding>,
}

const REQUIRED: [&str; 5] = ["id", "context_id", "query", "expected_ir", "expected_cli"];

fn case_from_value(v: &Value, pos: usize, out: &mut Vec<Finding>) -> Option<Triplet> {
    let Some(obj) = v.as_object() else {
        out.push(Finding::new("TPL_MISSING_FIELD", format!("case #{pos} is not an object")));
        return None;
    };
    let label = obj.get("id").and_then(Value::as_str).map_or_else(|| format!("#{pos}"), str::to_string);
    let mut ok = true;
    for key in REQUIRED {
        let present = match key {
            "expected_ir" => obj.get(key).is_some_and(Value::is_object),
            _ => obj.get(key).is_some_and(Value::is_string),
        };
        if !present {
            out.push(Finding::new("TPL_MISSING_FIELD", format!("case {label} lacks {key}")).with_subject(label.clone()));
            ok = false;
        }
    }
    let expect_blocked = match obj.get("expect_blocked") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            out.push(Finding::new("TPL_MISSING_FIELD", format!("case {label}: expect_blocked must be a boolean")).with_subject(label.clone()));
            ok = false;
            false
        }
    };
    if !ok {
        return None;
    }
    let text = |k: &str| obj[k].as_str().unwrap_or_default().to_string();
    let expected_ir = match policy_from_value(&obj["expected_ir"]) {
        Ok(p) => p,
        Err(e) => {
            out.push(Finding::new("TPL_BAD_IR", format!("case {label}: {e}")).with_subject(label.clone()));
            return None;
        }
    };
    let problems = validate_policy(&expected_ir);
    if !problems.is_empty() {
        let codes: Vec<_> = problems.iter().map(|f| f.code.as_str()).collect();
        out.push(Finding::new("TPL_BAD_IR", format!("case {label}: expected IR fails validation ({})", codes.join(", "))).with_subject(label.clone()));
        return None;
    }
    Some(Triplet {
        id: text("id"),
        context_id: text("context_id"),
        query: text("query"),
        expected_ir,
        expected_cli: text("expected_cli"),
        expect_blocked,
    })
}

/// Parses `{"cases": [...]}`. Empty input is an empty corpus.
pub fn parse_triplets(bytes: &[u8]) -> TripletSet {
    let mut set = TripletSet::default();
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return set;
    }
    let value = match parse_json(bytes) {
        Ok(v) => v,
        Err(e) => {
            set.findings.push(Finding::new("TPL_SYNTAX", e.to_string()));
            return set;
        }
    };
    let Some(cases) = value.get("cases").and_then(Value::as_array) else {
        set.findings.push(Finding::new("TPL_MISSING_FIELD", "top level must be an object with a cases array"));
        return set;
    };
    for (i, v) in cases.iter().enumerate() {
        if let Some(t) = case_from_value(v, i, &mut set.findings) {
            set.cases.push(t);
        }
    }
    set
}

pub fn load_triplets(path: &Path) -> std::io::Result<TripletSet> {
    Ok(parse_triplets(&std::fs::read(path)?))
}

pub fn triplets_to_value(cases: &[Triplet]) -> Value {
    json!({ "cases": cases.iter().map(Triplet::to_value).collect::<Vec<_>>() })
}
