//! Directory-backed character and clip store.
//!
//! Layout under the root:
//!
//! ```text
//! characters/<id>/model.json, textures/...
//! clips/<clip_id>/source, visemes.txt
//! index.tsv          one line per stored object: kind, id, parent
//! tmp/               staging area, renamed into place
//! ```
//!
//! Objects are create-only: a writer stages into `tmp/` and renames, so a
//! reader never sees a half-written bundle and concurrent writers of the
//! same id race harmlessly.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};
use thiserror::Error;
use toonforge_core::modelio::{Bundle, ModelIoError};

pub const STORE_ENV: &str = "TOONFORGE_STORE";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown id {0}")]
    NotFound(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Bundle(#[from] ModelIoError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// A stored lip-sync clip: the character it animates and its timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipRecord {
    pub character: String,
    pub visemes: String,
}

pub trait Store: Send + Sync {
    /// Store a bundle; `parent` and `ops` record how it was derived and take
    /// part in the id. Returns the id.
    fn put_character(&self, bundle: &Bundle, lineage: Option<(&str, &str)>) -> Result<String, StoreError>;
    fn get_character(&self, id: &str) -> Result<Bundle, StoreError>;
    fn put_clip(&self, clip: &ClipRecord) -> Result<String, StoreError>;
    fn get_clip(&self, id: &str) -> Result<ClipRecord, StoreError>;
}

/// Hash of every bundle path and its bytes, in path order, prefixed by the
/// lineage when the bundle came from an edit. First 32 hex digits.
pub fn character_id(bundle: &Bundle, lineage: Option<(&str, &str)>) -> String {
    let mut h = Sha256::new();
    if let Some((parent, ops)) = lineage {
        h.update(b"edit\0");
        h.update(parent.as_bytes());
        h.update([0]);
        h.update(ops.as_bytes());
        h.update([0]);
    }
    for (path, bytes) in &bundle.files {
        h.update((path.len() as u64).to_le_bytes());
        h.update(path.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())[..32].to_string()
}

pub fn clip_id(clip: &ClipRecord) -> String {
    let mut h = Sha256::new();
    h.update(clip.character.as_bytes());
    h.update([0]);
    h.update(clip.visemes.as_bytes());
    hex::encode(h.finalize())[..32].to_string()
}

/// Ids are lowercase hex; anything else cannot name a stored object.
fn valid_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

#[derive(Debug)]
pub struct DirStore {
    root: PathBuf,
    counter: AtomicU64,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<DirStore, StoreError> {
        let root = root.into();
        for sub in ["characters", "clips", "tmp"] {
            let p = root.join(sub);
            std::fs::create_dir_all(&p).map_err(io(&p))?;
        }
        Ok(DirStore { root, counter: AtomicU64::new(0) })
    }

    /// `$TOONFORGE_STORE`, else `./toonforge-store`.
    pub fn default_root() -> PathBuf {
        std::env::var_os(STORE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("toonforge-store"))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn staging(&self) -> PathBuf {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        self.root.join("tmp").join(format!("{}-{n}", std::process::id()))
    }

    /// Move a staged directory to `dest` unless an object already sits
    /// there (same id means same content).
    fn publish(&self, staged: &Path, dest: &Path, kind: &str, id: &str, parent: &str) -> Result<(), StoreError> {
        if dest.exists() {
            let _ = std::fs::remove_dir_all(staged);
            return Ok(());
        }
        if let Err(e) = std::fs::rename(staged, dest) {
            let _ = std::fs::remove_dir_all(staged);
            if !dest.exists() {
                return Err(io(dest)(e));
            }
            return Ok(());
        }
        let index = self.root.join("index.tsv");
        let mut f = OpenOptions::new().create(true).append(true).open(&index).map_err(io(&index))?;
        f.write_all(format!("{kind}\t{id}\t{parent}\n").as_bytes()).map_err(io(&index))?;
        Ok(())
    }
}

impl Store for DirStore {
    fn put_character(&self, bundle: &Bundle, lineage: Option<(&str, &str)>) -> Result<String, StoreError> {
        let id = character_id(bundle, lineage);
        let dest = self.root.join("characters").join(&id);
        if dest.exists() {
            return Ok(id);
        }
        let staged = self.staging();
        bundle.write_to(&staged)?;
        self.publish(&staged, &dest, "character", &id, lineage.map_or("-", |l| l.0))?;
        Ok(id)
    }

    fn get_character(&self, id: &str) -> Result<Bundle, StoreError> {
        let dir = self.root.join("characters").join(id);
        if !valid_id(id) || !dir.is_dir() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        Ok(Bundle::read_from(&dir)?)
    }

    fn put_clip(&self, clip: &ClipRecord) -> Result<String, StoreError> {
        let id = clip_id(clip);
        let dest = self.root.join("clips").join(&id);
        if dest.exists() {
            return Ok(id);
        }
        let staged = self.staging();
        std::fs::create_dir_all(&staged).map_err(io(&staged))?;
        for (name, text) in [("source", &clip.character), ("visemes.txt", &clip.visemes)] {
            let p = staged.join(name);
            std::fs::write(&p, text).map_err(io(&p))?;
        }
        self.publish(&staged, &dest, "clip", &id, &clip.character)?;
        Ok(id)
    }

    fn get_clip(&self, id: &str) -> Result<ClipRecord, StoreError> {
        let dir = self.root.join("clips").join(id);
        if !valid_id(id) || !dir.is_dir() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(io(&p))
        };
        Ok(ClipRecord { character: read("source")?, visemes: read("visemes.txt")? })
    }
}
