//! Content-addressed response cache: one text file per request key.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Hash a prompt is addressed by in scripted backends and records.
pub fn prompt_hash(text: &str) -> String {
    sha256_hex(text)
}

/// Key over everything that can change a response.
pub fn cache_key(model_id: &str, temperature: f64, max_tokens: u32, system_preamble: bool, prompt: &str) -> String {
    let material = serde_json::json!([model_id, temperature, max_tokens, system_preamble, prompt]);
    sha256_hex(material.to_string())
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn get(&self, key: &str) -> Result<Option<String>> {
        match fs::read_to_string(self.path(key)) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Values are immutable for a key, so concurrent writers race harmlessly;
    /// the rename keeps readers from seeing partial files.
    pub fn put(&self, key: &str, text: &str) -> Result<()> {
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}
