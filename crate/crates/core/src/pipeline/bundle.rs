use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ErrorKind, PipelineError, Stage};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Lists every file of a bundle. Carries no timestamps, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> Vec<u8> {
        let mut json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        json.push(b'\n');
        json
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.to_json())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output files held in memory, keyed by file name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub config_sha256: String,
    pub files: BTreeMap<String, Vec<u8>>,
}

fn write_error(message: String) -> PipelineError {
    PipelineError::new(Stage::Write, ErrorKind::Data, message)
}

impl ReportBundle {
    pub fn new(config_sha256: String) -> Self {
        ReportBundle { config_sha256, files: BTreeMap::new() }
    }

    /// Adds a CSV produced by `fill`.
    pub(crate) fn csv(
        &mut self,
        stage: Stage,
        name: String,
        fill: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>,
    ) -> Result<(), PipelineError> {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| PipelineError::internal(stage, e))?;
        self.files.insert(name, buf);
        Ok(())
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: self.config_sha256.clone(),
            files: self
                .files
                .iter()
                .map(|(name, bytes)| ManifestEntry {
                    name: name.clone(),
                    sha256: sha256_hex(bytes),
                    bytes: bytes.len() as u64,
                })
                .collect(),
        }
    }

    /// Writes every file and then the manifest into `dir`.
    ///
    /// The directory must be new, empty, or hold a previous bundle; files
    /// listed by an old manifest are deleted first so no stale output
    /// survives, and unknown files make the write fail. If a write fails
    /// midway, files written so far are removed and no manifest is left.
    pub fn write(&self, dir: &Path) -> Result<Manifest, PipelineError> {
        prepare_dir(dir)?;
        let mut written = Vec::new();
        let result = (|| {
            for (name, bytes) in &self.files {
                let path = dir.join(name);
                fs::write(&path, bytes).map_err(|e| write_error(format!("cannot write {}: {e}", path.display())))?;
                written.push(path);
            }
            let manifest = self.manifest();
            let path = dir.join(MANIFEST_NAME);
            fs::write(&path, manifest.to_json())
                .map_err(|e| write_error(format!("cannot write {}: {e}", path.display())))?;
            Ok(manifest)
        })();
        if result.is_err() {
            for path in written {
                let _ = fs::remove_file(path);
            }
        }
        result
    }

    /// Loads a bundle previously written to `dir`, checking every file
    /// against its manifest entry.
    pub fn read_dir(dir: &Path) -> Result<Self, PipelineError> {
        let manifest = read_manifest(dir)?
            .ok_or_else(|| write_error(format!("{} has no {MANIFEST_NAME}", dir.display())))?;
        let mut bundle = ReportBundle::new(manifest.config_sha256);
        for entry in manifest.files {
            let path = dir.join(&entry.name);
            let bytes = fs::read(&path).map_err(|e| write_error(format!("cannot read {}: {e}", path.display())))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(write_error(format!("{} does not match its manifest checksum", path.display())));
            }
            bundle.files.insert(entry.name, bytes);
        }
        Ok(bundle)
    }
}

fn read_manifest(dir: &Path) -> Result<Option<Manifest>, PipelineError> {
    let path = dir.join(MANIFEST_NAME);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read(&path).map_err(|e| write_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&text)
        .map(Some)
        .map_err(|e| write_error(format!("{} is not a valid manifest: {e}", path.display())))
}

fn prepare_dir(dir: &Path) -> Result<(), PipelineError> {
    if !dir.exists() {
        return fs::create_dir_all(dir).map_err(|e| write_error(format!("cannot create {}: {e}", dir.display())));
    }
    if let Some(old) = read_manifest(dir)? {
        for entry in &old.files {
            // Guard against manifests naming paths outside the directory.
            if entry.name.contains(['/', '\\']) || entry.name.starts_with('.') {
                continue;
            }
            let _ = fs::remove_file(dir.join(&entry.name));
        }
        let _ = fs::remove_file(dir.join(MANIFEST_NAME));
    }
    let leftover = fs::read_dir(dir)
        .map_err(|e| write_error(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(Result::ok)
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .min();
    match leftover {
        Some(name) => Err(PipelineError::new(
            Stage::Write,
            ErrorKind::Config,
            format!("output directory {} holds {name}, which no earlier run wrote; choose an empty directory", dir.display()),
        )),
        None => Ok(()),
    }
}
