use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{Outcome, PipelineTrace, Stage, Status};

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub request_id: String,
    pub unix_time: u64,
    pub context_id: String,
    pub query: String,
    /// `safe`, `blocked`, or `not_run`.
    pub gate: String,
    pub outcome: Outcome,
    pub finding_codes: Vec<String>,
}

impl AuditRecord {
    pub fn from_trace(t: &PipelineTrace) -> Self {
        let gate = match t.status(Stage::SafetyGate) {
            Status::Ok => "safe",
            Status::Blocked => "blocked",
            _ => "not_run",
        };
        AuditRecord {
            request_id: t.request_id.clone(),
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            context_id: t.context_id.clone(),
            query: t.query.clone(),
            gate: gate.into(),
            outcome: t.outcome(),
            finding_codes: t.findings().map(|f| f.code.clone()).collect(),
        }
    }
}

/// Append-only JSON-lines file shared by concurrent runs.
#[derive(Debug)]
pub struct AuditLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl AuditLog {
    pub fn open(path: impl Into<PathBuf>) -> io::Result<AuditLog> {
        let path = path.into();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(AuditLog { path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, trace: &PipelineTrace) -> io::Result<()> {
        let mut line = serde_json::to_string(&AuditRecord::from_trace(trace)).map_err(io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}
