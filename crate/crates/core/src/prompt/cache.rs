use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::template::hex;
use super::{normalize_text, PromptError, PromptTemplate};

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub prompt: String,
    pub completion: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Hex SHA-256 of the normalized description and the template hash.
pub fn cache_key(description: &str, tmpl: &PromptTemplate) -> String {
    let mut h = Sha256::new();
    h.update(normalize_text(description).as_bytes());
    h.update([0u8]);
    h.update(tmpl.hash().as_bytes());
    hex(&h.finalize())
}

/// Completion cache backed by an append-only JSONL file, or memory only.
/// Later records shadow earlier ones with the same key.
#[derive(Debug, Default)]
pub struct PromptCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheRecord>>,
    writer: Mutex<()>,
}

impl PromptCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load `path` if it exists; new records are appended to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let err = |message: String| PromptError::Cache { path: path.display().to_string(), message };
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
                entries.insert(rec.key.clone(), rec);
            }
        }
        Ok(Self { path: Some(path), entries: RwLock::new(entries), writer: Mutex::new(()) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: &str, prompt: &str, completion: &str) -> Result<(), PromptError> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let rec = CacheRecord {
            key: key.to_owned(),
            prompt: prompt.to_owned(),
            completion: completion.to_owned(),
            timestamp,
        };
        let _guard = self.writer.lock().unwrap();
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&rec).expect("record serializes");
            line.push('\n');
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(line.as_bytes())?;
        }
        self.entries.write().unwrap().insert(rec.key.clone(), rec);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_normalizes_description() {
        let t = PromptTemplate::default();
        assert_eq!(cache_key("A person  walks", &t), cache_key(" a person walks", &t));
        assert_ne!(cache_key("a person walks", &t), cache_key("a person runs", &t));
        let u = PromptTemplate { few_shot_examples: vec![], ..t.clone() };
        assert_ne!(cache_key("x", &t), cache_key("x", &u));
    }

    #[test]
    fn persisted_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cache.jsonl");
        let c = PromptCache::open(&p).unwrap();
        assert!(c.is_empty());
        c.insert("k1", "p1", "c1").unwrap();
        c.insert("k2", "p2", "c2").unwrap();
        c.insert("k1", "p1", "c1b").unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        let re = PromptCache::open(&p).unwrap();
        assert_eq!(re.len(), 2);
        assert_eq!(re.get("k1").unwrap().completion, "c1b");
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["completion", "key", "prompt", "timestamp"]);
    }

    #[test]
    fn corrupt_line_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cache.jsonl");
        std::fs::write(&p, "{not json}\n").unwrap();
        assert!(matches!(PromptCache::open(&p), Err(PromptError::Cache { .. })));
    }
}
