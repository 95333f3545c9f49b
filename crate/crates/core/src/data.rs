//! Location of the shipped data files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "NRHLC_DATA_DIR";

/// `$NRHLC_DATA_DIR` if set, otherwise the `data/` directory of the source tree.
pub fn data_dir() -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data")),
    }
}

pub(crate) fn read_data_file(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read data file {}: {e}", path.display())))
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{what}: {e}")))
}

/// Regenerate the derived data files (DRNL table and outer/middle-ear
/// kernel) into `dir`.
pub fn write_derived_files(dir: &Path, fs: f64) -> Result<Vec<PathBuf>> {
    use crate::auditory::{derive_drnl_table, OmeKernel, DRNL_FILE, OME_FILE};
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let drnl = derive_drnl_table(fs)?;
    let ome = OmeKernel::derive(fs)?;
    let mut written = Vec::new();
    for (name, body) in [(DRNL_FILE, drnl.to_toml()?), (OME_FILE, ome.to_toml()?)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
