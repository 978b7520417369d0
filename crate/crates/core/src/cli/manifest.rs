//! Flat key=value run manifests with input digests.
//!
//! A manifest records everything needed to replay a command: resolved
//! parameters, seeds, sha256 digests of the input files, the toolkit
//! version and per-phase wall-clock timings. Keys keep insertion order so
//! the file diffs cleanly between runs.

use std::fmt::Display;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        let mut m = RunManifest::default();
        m.push("command", command);
        m.push("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        debug_assert!(!key.contains('=') && !key.contains('\n'), "bad key {:?}", key);
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_file_digest(&mut self, key: &str, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.push(key, digest);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Format(format!("manifest is missing key {:?}", key)))
    }

    pub fn require_parsed<T>(&self, key: &str) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        self.require(key)?.parse::<T>().map_err(|e| {
            Error::Format(format!("manifest key {:?} does not parse: {}", key, e))
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{}={}", k, v);
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("manifest line is not key=value: {:?}", line),
            })?;
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(RunManifest { entries })
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file =
        fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}
