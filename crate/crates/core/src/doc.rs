//! Field-level decoding helpers for the JSON documents this crate accepts.
//!
//! Documents are first parsed into a [`serde_json::Value`] so that syntax
//! errors carry a position, then walked by a [`Decoder`] that records every
//! missing or mistyped field with its path instead of stopping at the first.

use std::fmt;

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at line {} column {}: {}", self.line, self.column, self.message)
    }
}

pub fn parse_json(bytes: &[u8]) -> Result<Value, SyntaxError> {
    serde_json::from_slice(bytes).map_err(|e| SyntaxError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

#[derive(Debug, Default)]
pub struct Decoder {
    pub errors: Vec<FieldError>,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fail(&mut self, path: impl Into<String>, reason: impl Into<String>) {
        self.errors.push(FieldError { path: path.into(), reason: reason.into() });
    }

    pub fn finish(self) -> Result<(), Vec<FieldError>> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(self.errors)
        }
    }

    pub fn object<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Map<String, Value>> {
        match v {
            Value::Object(m) => Some(m),
            other => {
                self.fail(path, format!("expected object, found {}", kind_of(other)));
                None
            }
        }
    }

    pub fn reject_unknown(&mut self, obj: &Map<String, Value>, path: &str, allowed: &[&str]) {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.fail(join(path, key), "unknown field");
            }
        }
    }

    fn required<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<&'v Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.fail(join(path, key), "missing required field");
        }
        v
    }

    pub fn as_str(&mut self, v: &Value, path: &str) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            other => {
                self.fail(path, format!("expected string, found {}", kind_of(other)));
                None
            }
        }
    }

    pub fn req_str(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<String> {
        let v = self.required(obj, path, key)?;
        self.as_str(v, &join(path, key))
    }

    pub fn opt_str(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<Option<String>> {
        match obj.get(key) {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.as_str(v, &join(path, key)).map(Some),
        }
    }

    pub fn req_bool(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<bool> {
        match self.required(obj, path, key)? {
            Value::Bool(b) => Some(*b),
            other => {
                self.fail(join(path, key), format!("expected boolean, found {}", kind_of(other)));
                None
            }
        }
    }

    pub fn req_i64(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<i64> {
        match self.required(obj, path, key)? {
            Value::Number(n) if n.is_i64() => n.as_i64(),
            other => {
                self.fail(join(path, key), format!("expected integer, found {}", kind_of(other)));
                None
            }
        }
    }

    pub fn as_array<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Vec<Value>> {
        match v {
            Value::Array(a) => Some(a),
            other => {
                self.fail(path, format!("expected array, found {}", kind_of(other)));
                None
            }
        }
    }

    pub fn req_array<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<&'v Vec<Value>> {
        let v = self.required(obj, path, key)?;
        self.as_array(v, &join(path, key))
    }

    pub fn opt_array<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<Option<&'v Vec<Value>>> {
        match obj.get(key) {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.as_array(v, &join(path, key)).map(Some),
        }
    }

    pub fn req_object<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<&'v Map<String, Value>> {
        let v = self.required(obj, path, key)?;
        self.object(v, &join(path, key))
    }

    /// Decodes an array of strings; missing key yields an empty list when `required` is false.
    pub fn str_list(&mut self, obj: &Map<String, Value>, path: &str, key: &str, required: bool) -> Option<Vec<String>> {
        let arr = if required {
            self.req_array(obj, path, key)?
        } else {
            match self.opt_array(obj, path, key)? {
                Some(a) => a,
                None => return Some(Vec::new()),
            }
        };
        let p = join(path, key);
        let mut out = Vec::with_capacity(arr.len());
        let mut ok = true;
        for (i, v) in arr.iter().enumerate() {
            match self.as_str(v, &index(&p, i)) {
                Some(s) => out.push(s),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }
}
