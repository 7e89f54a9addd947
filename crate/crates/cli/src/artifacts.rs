//! Output directory bookkeeping: atomic writes, header comments and the
//! manifest used to detect reruns with unchanged inputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

/// First line of every output file.
#[derive(Debug, Clone)]
pub struct Header {
    pub stage: &'static str,
    pub config_hash: String,
    pub sample_seed: u64,
    pub projection_seed: u64,
}

impl Header {
    pub fn line(&self) -> String {
        format!(
            "# linkpop {VERSION} stage={} config={} seeds=sample:{},projection:{}\n",
            self.stage, self.config_hash, self.sample_seed, self.projection_seed
        )
    }
}

/// Drops leading `#` comment lines, as written in front of binary artifacts.
pub fn strip_header(bytes: &[u8]) -> &[u8] {
    let mut rest = bytes;
    while rest.first() == Some(&b'#') {
        match rest.iter().position(|&b| b == b'\n') {
            Some(k) => rest = &rest[k + 1..],
            None => return &[],
        }
    }
    rest
}

/// Reads `# key=value` settings from the leading comment lines of a text artifact.
pub fn header_value(bytes: &[u8], key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    bytes
        .split(|&b| b == b'\n')
        .take_while(|l| l.first() == Some(&b'#'))
        .filter_map(|l| std::str::from_utf8(l).ok())
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Self {
                tool_version: VERSION.into(),
                stages: BTreeMap::new(),
            });
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }

    /// The stage's recorded outputs are present and unchanged, and it was run
    /// with the same configuration and inputs.
    pub fn is_fresh(&self, dir: &Path, stage: &str, config_hash: &str, inputs: &BTreeMap<String, String>) -> bool {
        let Some(rec) = self.stages.get(stage) else {
            return false;
        };
        self.tool_version == VERSION
            && rec.config_hash == config_hash
            && &rec.inputs == inputs
            && rec
                .outputs
                .iter()
                .all(|(name, hash)| hash_file(&dir.join(name)).is_ok_and(|h| &h == hash))
    }
}

/// Path of an upstream artifact, or an error naming the command that produces it.
pub fn require_artifact(dir: &Path, name: &str, producer: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if !path.exists() {
        bail!(
            "missing artifact {}: run `linkpop {producer}` first (with the same --out)",
            path.display()
        );
    }
    Ok(path)
}
