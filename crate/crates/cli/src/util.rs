use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|err| CliError::Input(format!("{}: {err}", path.display())))
}

/// Writes through a temporary file in the target directory plus a rename, so
/// readers never observe a half-written file. Creates parent directories.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let ctx = |err: std::io::Error| CliError::Input(format!("{}: {err}", path.display()));
    fs::create_dir_all(dir).map_err(ctx)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(ctx)?;
    tmp.write_all(bytes).map_err(ctx)?;
    tmp.persist(path)
        .map_err(|err| CliError::Input(format!("{}: {}", path.display(), err.error)))?;
    Ok(())
}

/// Filesystem-safe slug for embedding trait names in output file names.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}
