//! Output files are staged in memory and only land on disk once a command has
//! produced all of them. Each file is written to a temporary sibling and
//! renamed into place, so a failed command leaves nothing half-written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RSSILOC_OUT_DIR";

#[derive(Debug, Default)]
pub struct Artifacts {
    staged: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.staged.push((path.into(), bytes.into()));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.staged.iter().map(|(p, _)| p.as_path())
    }

    /// Writes every staged file. All temporaries are written before the
    /// first rename.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut pending = Vec::with_capacity(self.staged.len());
        for (path, bytes) in &self.staged {
            let dir = parent_dir(path);
            fs::create_dir_all(dir).map_err(Error::io(dir))?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(Error::io(dir))?;
            tmp.write_all(bytes).map_err(Error::io(tmp.path()))?;
            pending.push((tmp, path));
        }
        let mut written = Vec::with_capacity(pending.len());
        for (tmp, path) in pending {
            tmp.persist(path).map_err(|e| Error::Io { path: path.clone(), source: e.error })?;
            written.push(path.clone());
        }
        Ok(written)
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes a single file atomically.
pub fn write_atomic(path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) -> Result<()> {
    let mut a = Artifacts::new();
    a.stage(path, bytes);
    a.commit().map(|_| ())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}
