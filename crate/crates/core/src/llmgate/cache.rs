use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GateError;

/// One recorded exchange with the endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub prompt_hash: String,
    pub model: String,
    pub request: serde_json::Value,
    pub response: serde_json::Value,
    pub timestamp: String,
    pub latency_ms: u64,
}

/// Content address of a request: SHA-256 over the model name and the exact
/// request body.
pub fn prompt_hash(model: &str, body: &str) -> String {
    let mut h = Sha256::new();
    h.update((model.len() as u64).to_le_bytes());
    h.update(model.as_bytes());
    h.update(body.as_bytes());
    hex::encode(h.finalize())
}

/// Directory of `<hash>.json` transcripts. Reads are lock-free, writes go
/// through a temp file and rename under a lock.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
    counter: AtomicU64,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GateError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| GateError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(ResponseCache {
            dir,
            write_lock: Mutex::new(()),
            counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn get(&self, hash: &str) -> Result<Option<Transcript>, GateError> {
        let path = self.path_for(hash);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| GateError::Cache(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(GateError::Cache(format!("{}: {e}", path.display()))),
        }
    }

    pub fn put(&self, t: &Transcript) -> Result<(), GateError> {
        let path = self.path_for(&t.prompt_hash);
        let mut text = serde_json::to_string_pretty(t).expect("transcript serializes");
        text.push('\n');
        let _guard = self.write_lock.lock().unwrap();
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            t.prompt_hash,
            std::process::id(),
            self.counter.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| GateError::Cache(format!("{}: {e}", path.display())))
    }

    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter(|e| e.file_name().to_string_lossy().ends_with(".json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
