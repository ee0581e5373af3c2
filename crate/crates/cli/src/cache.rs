//! Content-addressed stage cache backed by `manifest.json` in the output
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a stage's inputs: its name plus every upstream hash.
pub fn stage_key(stage: &str, inputs: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).as_bytes());
    h.update([0]);
    h.update(stage.as_bytes());
    for i in inputs {
        h.update([0]);
        h.update(i.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Entry {
    key: String,
    artifact: String,
    sha256: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    stages: BTreeMap<String, Entry>,
}

/// A stage output and whether it came from the cache.
pub struct Cached<T> {
    pub value: T,
    pub hash: String,
    pub reused: bool,
}

pub struct StageCache {
    dir: PathBuf,
    manifest: Manifest,
    force: bool,
}

impl StageCache {
    pub fn open(dir: &Path, force: bool) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(MANIFEST);
        let manifest = match fs::read(&path) {
            // An unreadable manifest only costs a recomputation.
            Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_else(|e| {
                log::warn!("ignoring {}: {e}", path.display());
                Manifest::default()
            }),
            Err(_) => Manifest::default(),
        };
        Ok(StageCache { dir: dir.to_path_buf(), manifest, force })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn lookup(&self, stage: &str, key: &str, file: &str) -> Option<(Vec<u8>, String)> {
        if self.force {
            return None;
        }
        let entry = self.manifest.stages.get(stage)?;
        if entry.key != key || entry.artifact != file {
            return None;
        }
        let bytes = fs::read(self.dir.join(file)).ok()?;
        let hash = sha256_hex(&bytes);
        (hash == entry.sha256).then_some((bytes, hash))
    }

    /// Returns the stored artifact when `key` matches the manifest and the
    /// file is intact, otherwise runs `compute` and persists its output.
    pub fn stage<T, F>(&mut self, stage: &str, file: &str, key: &str, compute: F) -> Result<Cached<T>>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        if let Some((bytes, hash)) = self.lookup(stage, key, file) {
            match serde_json::from_slice(&bytes) {
                Ok(value) => {
                    log::info!("stage `{stage}`: reusing {file}");
                    return Ok(Cached { value, hash, reused: true });
                }
                Err(e) => log::warn!("stage `{stage}`: stored {file} unreadable ({e}), recomputing"),
            }
        }
        log::info!("stage `{stage}`: running");
        let value = compute().with_context(|| format!("stage `{stage}` failed"))?;
        let text = to_json(&value);
        let path = self.dir.join(file);
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        let hash = sha256_hex(text.as_bytes());
        self.manifest.stages.insert(
            stage.to_string(),
            Entry { key: key.to_string(), artifact: file.to_string(), sha256: hash.clone() },
        );
        self.save()?;
        Ok(Cached { value, hash, reused: false })
    }

    /// Drops a stage that does not apply to this run, with its artifact.
    pub fn discard(&mut self, stage: &str, file: &str) -> Result<()> {
        let path = self.dir.join(file);
        if path.exists() {
            fs::remove_file(&path).with_context(|| format!("removing {}", path.display()))?;
        }
        if self.manifest.stages.remove(stage).is_some() {
            self.save()?;
        }
        Ok(())
    }

    fn save(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        fs::write(&path, to_json(&self.manifest)).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lookup_hits_and_force_misses() {
        let dir = tempfile::tempdir().unwrap();
        let mut cache = StageCache::open(dir.path(), false).unwrap();
        let a: Cached<Vec<u32>> = cache.stage("s", "s.json", "k1", || Ok(vec![1, 2])).unwrap();
        assert!(!a.reused);
        let mut cache = StageCache::open(dir.path(), false).unwrap();
        let b: Cached<Vec<u32>> = cache.stage("s", "s.json", "k1", || unreachable!()).unwrap();
        assert!(b.reused);
        assert_eq!(b.value, vec![1, 2]);
        assert_eq!(a.hash, b.hash);
        let c: Cached<Vec<u32>> = cache.stage("s", "s.json", "k2", || Ok(vec![3])).unwrap();
        assert!(!c.reused);
        let mut forced = StageCache::open(dir.path(), true).unwrap();
        let d: Cached<Vec<u32>> = forced.stage("s", "s.json", "k2", || Ok(vec![3])).unwrap();
        assert!(!d.reused);
    }

    #[test]
    fn tampered_artifact_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let mut cache = StageCache::open(dir.path(), false).unwrap();
        let _: Cached<u32> = cache.stage("s", "s.json", "k", || Ok(7)).unwrap();
        fs::write(dir.path().join("s.json"), "8\n").unwrap();
        let again: Cached<u32> = cache.stage("s", "s.json", "k", || Ok(7)).unwrap();
        assert!(!again.reused);
        assert_eq!(again.value, 7);
    }

    #[test]
    fn keys_depend_on_every_input() {
        assert_ne!(stage_key("a", &["x", "y"]), stage_key("a", &["xy"]));
        assert_ne!(stage_key("a", &["x"]), stage_key("b", &["x"]));
        assert_eq!(stage_key("a", &["x"]), stage_key("a", &["x"]));
    }
}
