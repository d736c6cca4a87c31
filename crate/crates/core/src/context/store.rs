use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{encode_context, load_context, ContextError, NetworkContext};
use crate::net::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSummary {
    pub id: String,
    pub title: String,
    pub objects: usize,
    pub zones: usize,
    pub services: usize,
    pub schedules: usize,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no context with id {0:?}")]
    NotFound(String),
    #[error("stored context {id:?} is corrupt: {source}")]
    Corrupt { id: String, source: ContextError },
    #[error("context store I/O error: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound(_) => "CTX_NOT_FOUND",
            StoreError::Corrupt { .. } => "CTX_SCHEMA",
            StoreError::Io(_) => "CTX_STORE_IO",
        }
    }
}

/// A directory of canonical context documents, one `<id>.json` per context.
///
/// Writes go through a temporary file and a rename while holding the write
/// lock, so concurrent readers only ever observe complete documents.
#[derive(Debug)]
pub struct ContextStore {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl ContextStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<ContextStore> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(ContextStore { root, write_lock: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}.json"))
    }

    pub fn save(&self, ctx: &NetworkContext) -> Result<String, StoreError> {
        if !is_identifier(&ctx.id) {
            return Err(StoreError::Io(io::Error::new(io::ErrorKind::InvalidInput, "context id is not an identifier")));
        }
        let text = encode_context(ctx);
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let tmp = self.root.join(format!(".{}.tmp", ctx.id));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.path_for(&ctx.id))?;
        Ok(ctx.id.clone())
    }

    pub fn get(&self, id: &str) -> Result<NetworkContext, StoreError> {
        if !is_identifier(id) {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let bytes = match fs::read(self.path_for(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        load_context(&bytes).map_err(|source| StoreError::Corrupt { id: id.to_string(), source })
    }

    pub fn list(&self) -> Result<Vec<ContextSummary>, StoreError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let path = entry?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if !is_identifier(id) {
                continue;
            }
            out.push(self.get(id)?.summary());
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}
