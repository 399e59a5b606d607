use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Write `bytes` to `path` atomically: write a sibling temp file, then rename.
/// A crashed or concurrent run never leaves a partially written output behind.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Round half away from zero to two decimals, used for report display.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
