//! File-backed content-addressed storage: `{root}/{kind}/{id}.json`, where
//! the id is the sha256 of the payload bytes. Writes go to a temporary file
//! in the same directory and are renamed into place, so readers see either
//! nothing or the whole artifact.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use acceptance_core::hashing::sha256_hex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ArtifactKind {
    Dataset,
    Posterior,
    Prior,
    Scenario,
}

impl ArtifactKind {
    fn dir(self) -> &'static str {
        match self {
            Self::Dataset => "datasets",
            Self::Posterior => "posteriors",
            Self::Prior => "priors",
            Self::Scenario => "scenarios",
        }
    }
}

/// Links from an artifact to the artifacts it was derived from, keyed by
/// role (`dataset`, `prior`, `sourcePosterior`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub v: u32,
    pub kind: Option<ArtifactKind>,
    pub links: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Ids are lowercase sha256 hex; anything else cannot name a stored file.
pub fn is_valid_id(id: &str) -> bool {
    id.len() == 64 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        for kind in [ArtifactKind::Dataset, ArtifactKind::Posterior, ArtifactKind::Prior, ArtifactKind::Scenario] {
            std::fs::create_dir_all(root.join(kind.dir()))?;
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, kind: ArtifactKind, id: &str, suffix: &str) -> PathBuf {
        self.root.join(kind.dir()).join(format!("{id}{suffix}"))
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        let dir = path.parent().expect("artifact paths have a parent");
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    /// Store `bytes` and return their id. Storing the same bytes twice is a
    /// no-op returning the same id.
    pub fn put(&self, kind: ArtifactKind, bytes: &[u8]) -> std::io::Result<String> {
        let id = sha256_hex(bytes);
        let path = self.path(kind, &id, ".json");
        if !path.exists() {
            self.write_atomic(&path, bytes)?;
        }
        Ok(id)
    }

    pub fn put_with_provenance(&self, kind: ArtifactKind, bytes: &[u8], links: BTreeMap<String, String>) -> std::io::Result<String> {
        let id = self.put(kind, bytes)?;
        let record = Provenance {
            v: 1,
            kind: Some(kind),
            links,
        };
        let sidecar = self.path(kind, &id, ".provenance.json");
        self.write_atomic(&sidecar, &serde_json::to_vec(&record).expect("provenance serializes"))?;
        Ok(id)
    }

    pub fn get(&self, kind: ArtifactKind, id: &str) -> std::io::Result<Option<Vec<u8>>> {
        if !is_valid_id(id) {
            return Ok(None);
        }
        match std::fs::read(self.path(kind, id, ".json")) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn provenance(&self, kind: ArtifactKind, id: &str) -> std::io::Result<Option<Provenance>> {
        if !is_valid_id(id) {
            return Ok(None);
        }
        match std::fs::read(self.path(kind, id, ".provenance.json")) {
            Ok(b) => Ok(serde_json::from_slice(&b).ok()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}
