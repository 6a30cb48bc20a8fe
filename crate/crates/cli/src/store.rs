//! Content-addressed artifact directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create artifact dir {}", root.display()))?;
        Ok(Store { root: root.to_owned() })
    }

    /// `<root>/<kind>-<key>.<ext>`
    pub fn path(&self, kind: &str, key: &str, ext: &str) -> PathBuf {
        self.root.join(format!("{kind}-{key}.{ext}"))
    }
}

/// Write through a temporary file so a cached path is either complete or
/// absent.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let file = File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    let mut out = BufWriter::new(file);
    fill(&mut out)?;
    out.flush()?;
    drop(out);
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))
}
