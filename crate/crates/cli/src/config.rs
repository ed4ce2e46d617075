//! Run configuration: defaults, config-file overlay, canonical hashing, and
//! atomic output records.

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Effective configuration of one invocation. Fully serializable; a run is
/// reproducible from this alone.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: Option<String>,
    pub seed: u64,
    pub replicas: u64,
    pub eps: f64,
    pub tol: f64,
    pub max_terms: u64,
    pub threads: Option<usize>,
    /// Command-specific arguments, sorted by key for canonical form.
    pub args: BTreeMap<String, String>,
}

impl RunConfig {
    /// Canonical serialization: struct field order is fixed and `args` is a
    /// sorted map, so equal configs hash equally.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_json().as_bytes());
        hex_string(&h.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Report envelope written next to data files. `results` regenerates
/// byte-identically from `config`; `wall_ms` is measurement metadata.
#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub config: RunConfig,
    pub config_hash: String,
    pub results: serde_json::Value,
    pub wall_ms: u128,
}

/// Values shared by every command, after merging flags over the config file
/// over built-in defaults.
#[derive(Debug, Clone)]
pub struct Effective {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol: f64,
    pub max_terms: u64,
    pub eps: f64,
    pub replicas: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_terms: Option<u64>,
    pub eps: Option<f64>,
    pub replicas: Option<u64>,
    pub threads: Option<usize>,
}

/// Flat `key = value` file; `#` starts a comment. Keys mirror the long flags:
/// seed, out, tol, max-terms, eps, replicas, threads.
pub fn parse_config_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |e: &dyn std::fmt::Display| {
            anyhow!("{}:{}: bad value for {key}: {e}", path.display(), lineno + 1)
        };
        match key {
            "seed" => cfg.seed = Some(value.parse().map_err(|e| bad(&e))?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "tol" => cfg.tol = Some(value.parse().map_err(|e| bad(&e))?),
            "max-terms" => cfg.max_terms = Some(value.parse().map_err(|e| bad(&e))?),
            "eps" => cfg.eps = Some(value.parse().map_err(|e| bad(&e))?),
            "replicas" => cfg.replicas = Some(value.parse().map_err(|e| bad(&e))?),
            "threads" => cfg.threads = Some(value.parse().map_err(|e| bad(&e))?),
            other => return Err(anyhow!("{}:{}: unknown key `{other}`", path.display(), lineno + 1)),
        }
    }
    Ok(cfg)
}

/// Writes `content` to `path` atomically (temp file + rename), so failed runs
/// never leave partial outputs behind.
pub fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let tmp = path.with_extension(format!(
        "tmp-{}",
        std::process::id()
    ));
    std::fs::write(&tmp, content).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot rename {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

/// Renders a float with 17 significant digits (round-trip safe) for CSV.
pub fn csv_f64(x: f64) -> String {
    format!("{x:.16e}")
}
