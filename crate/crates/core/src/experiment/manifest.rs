use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scattering::Verdict;

use super::config::ScenarioConfig;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn for_file(root: &Path, relative: &str) -> Result<Self> {
        let data = std::fs::read(root.join(relative))?;
        Ok(FileEntry { path: relative.to_string(), sha256: sha256_hex(&data), bytes: data.len() as u64 })
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Record of one scenario run. The timing block is the only part that
/// changes between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub scenario: String,
    pub code_version: String,
    pub output_dir: PathBuf,
    pub config: ScenarioConfig,
    pub timing: Timing,
    pub passed: bool,
    pub verdicts: BTreeMap<String, Verdict>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: RunManifest = serde_json::from_str(text)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported manifest schema version {}", m.schema_version)));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == name)
    }

    /// Recomputes every digest and reports the entries that no longer match.
    pub fn stale_files(&self) -> Result<Vec<String>> {
        let mut stale = Vec::new();
        for f in &self.files {
            if FileEntry::for_file(&self.output_dir, &f.path)? != *f {
                stale.push(f.path.clone());
            }
        }
        Ok(stale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn json_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        let cfg = ScenarioConfig::from_toml_str("scenario = \"fk-lemma\"").unwrap();
        let m = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            scenario: "fk-lemma".into(),
            code_version: "0.0.0".into(),
            output_dir: dir.path().to_path_buf(),
            config: cfg,
            timing: Timing { wall_seconds: 0.5 },
            passed: true,
            verdicts: BTreeMap::new(),
            files: vec![FileEntry::for_file(dir.path(), "a.csv").unwrap()],
        };
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(back.stale_files().unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), "x\n2\n").unwrap();
        assert_eq!(back.stale_files().unwrap(), vec!["a.csv".to_string()]);
        assert!(RunManifest::from_json(&m.to_json().unwrap().replace("\"schema_version\": 1", "\"schema_version\": 9")).is_err());
    }
}
