//! Atomic file output and run provenance records.
//!
//! Every artifact the pipeline writes goes through [`write_atomic`]
//! (write to a temporary sibling, then rename), so a crash never leaves a
//! half-written file behind. Commands additionally drop a small manifest
//! next to each artifact recording the command, its arguments, the master
//! seed, and content digests of the inputs — enough to reproduce the
//! artifact byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::sha256_hex;

/// Write `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    let tmp: PathBuf = match dir {
        Some(d) => d.join(format!(".{file_name}.tmp")),
        None => PathBuf::from(format!(".{file_name}.tmp")),
    };
    std::fs::write(&tmp, bytes).map_err(|e| Error::file(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::file(path, e))?;
    Ok(())
}

/// Digest of one input file consumed by a command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run the command that produced an artifact.
///
/// Deliberately excludes timestamps and host details so the manifest
/// itself is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub flags: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub master_seed: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, flags: Vec<String>, master_seed: Option<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            flags,
            inputs: Vec::new(),
            master_seed,
        }
    }

    /// Record the content digest of an input file.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Serialize to pretty JSON (stable field order, trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Path of the manifest that sits beside `artifact`.
    pub fn sidecar_path(artifact: &Path) -> PathBuf {
        let mut name = artifact
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "out".to_string());
        name.push_str(".manifest.json");
        artifact.with_file_name(name)
    }

    /// Write the manifest next to the artifact it describes.
    pub fn write_beside(&self, artifact: &Path) -> Result<()> {
        write_atomic(&Self::sidecar_path(artifact), self.to_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        // No stray temporary remains.
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn manifest_round_trips_and_names_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        std::fs::write(&input, b"payload").unwrap();

        let mut m = RunManifest::new("generate", vec!["--seed".into(), "42".into()], Some(42));
        m.add_input(&input).unwrap();
        let artifact = dir.path().join("corpus.jsonl");
        m.write_beside(&artifact).unwrap();

        let sidecar = RunManifest::sidecar_path(&artifact);
        assert_eq!(sidecar.file_name().unwrap(), "corpus.jsonl.manifest.json");
        let text = std::fs::read_to_string(&sidecar).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.inputs[0].sha256, crate::seeds::sha256_hex(b"payload"));
    }

    #[test]
    fn manifest_is_deterministic() {
        let a = RunManifest::new("train", vec!["--seed".into(), "7".into()], Some(7));
        let b = RunManifest::new("train", vec!["--seed".into(), "7".into()], Some(7));
        assert_eq!(a.to_json(), b.to_json());
    }
}
