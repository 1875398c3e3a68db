//! Atomic writes and content hashes.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{file_err, Result};

/// Write `bytes` to a temporary file next to `path`, then rename it over
/// `path`, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err(dir))?;
    tmp.write_all(bytes).map_err(file_err(tmp.path()))?;
    tmp.as_file().sync_all().map_err(file_err(tmp.path()))?;
    tmp.persist(path).map_err(|e| file_err(path)(e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(file_err(path))?;
    Ok(sha256_hex(&bytes))
}
