//! Versioned binary artifacts: an 8-byte tag, a little-endian format
//! version, then a bincode payload.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn save<T: Serialize>(path: &Path, tag: &[u8; 8], version: u32, value: &T) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(tag).map_err(|e| Error::io(path, e))?;
    out.write_all(&version.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    bincode::serialize_into(&mut out, value).map_err(|e| Error::Artifact(e.to_string()))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn load<T: DeserializeOwned>(path: &Path, tag: &[u8; 8], version: u32) -> Result<T> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut header = [0u8; 12];
    input.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[..8] != tag {
        return Err(Error::Artifact(format!(
            "{} is not a {} artifact",
            path.display(),
            String::from_utf8_lossy(tag).trim_end()
        )));
    }
    let found = u32::from_le_bytes(header[8..].try_into().expect("4 bytes"));
    if found != version {
        return Err(Error::Artifact(format!(
            "{}: format version {found}, expected {version}",
            path.display()
        )));
    }
    bincode::deserialize_from(input).map_err(|e| Error::Artifact(e.to_string()))
}
