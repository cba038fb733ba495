use std::fs;
use std::path::{Path, PathBuf};

use mclift::LiftConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub const FILE_NAME: &str = "manifest.json";

/// Written by `analyze` next to the container. `synthesize` reads it for the
/// extrapolation parameters and the expected hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sequence: String,
    pub input: PathBuf,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub frames: usize,
    pub axis: String,
    pub config: LiftConfig,
    pub container: String,
    pub motion_files: Vec<String>,
    /// Hash of the raw plane bytes of the input.
    pub raw_sha256: String,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let json = serde_json::to_vec_pretty(self).map_err(mclift::Error::from)?;
        fs::write(dir.join(FILE_NAME), json)?;
        Ok(())
    }

    /// The manifest beside `container`, if it describes that container.
    pub fn beside(container: &Path) -> CliResult<Option<Manifest>> {
        let path = container.parent().unwrap_or(Path::new(".")).join(FILE_NAME);
        if !path.exists() {
            return Ok(None);
        }
        let m: Manifest = serde_json::from_slice(&fs::read(&path)?)
            .map_err(|e| CliError::DataMsg(format!("{}: {e}", path.display())))?;
        let name = container.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        Ok((m.container == name).then_some(m))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
