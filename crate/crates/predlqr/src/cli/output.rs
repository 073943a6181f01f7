//! File emission: atomic writes, CSV metadata trailers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Writes via a temp file and rename, so readers never see partial output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = PathBuf::from(path);
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    tmp.set_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Appends the metadata comment line every emitted CSV carries.
pub fn csv_with_meta(body: &str, seed: u64) -> String {
    let version = env!("CARGO_PKG_VERSION");
    let mut out = String::from(body);
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&format!("# seed={seed} version={version}\n"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_line_is_appended() {
        let csv = csv_with_meta("a,b\n1,2\n", 9);
        assert!(csv.ends_with(&format!("# seed=9 version={}\n", env!("CARGO_PKG_VERSION"))));
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = std::env::temp_dir().join(format!("predlqr-test-{}", std::process::id()));
        let path = dir.join("x.csv");
        write_atomic(&path, "hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        fs::remove_dir_all(&dir).ok();
    }
}
