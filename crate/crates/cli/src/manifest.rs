use std::ffi::OsString;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest as _, Sha256};

use crate::error::CliError;

/// Record of one run. Re-running `argv` reproduces every digested output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub argv: Vec<String>,
    pub parameters: Value,
    pub policy: String,
    pub version: String,
    /// Seconds since the Unix epoch; not part of any digest.
    pub timestamp: u64,
    pub outputs: Vec<Digest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digest {
    pub file: String,
    pub sha256: String,
}

impl Digest {
    pub fn of(file: &str, bytes: &[u8]) -> Self {
        Digest { file: file.to_owned(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Drops `--out DIR` / `--out=DIR` so a manifest can be replayed elsewhere.
pub fn strip_out(args: &[OsString]) -> Result<Vec<String>, CliError> {
    let mut kept = Vec::new();
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_str().ok_or_else(|| CliError::usage("arguments must be valid UTF-8"))?;
        if s == "--out" {
            iter.next();
        } else if !s.starts_with("--out=") {
            kept.push(s.to_owned());
        }
    }
    Ok(kept)
}

pub fn read(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_owned(), source })
}
