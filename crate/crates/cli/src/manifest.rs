//! `manifest.json`: what was run, with which resolved configuration, and
//! checksums of every file written.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::OutputFile;
use crate::config::ConfigFile;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    /// Some sweep points failed.
    pub partial: bool,
    /// Lamb–Dicke parameter actually used.
    pub eta: f64,
    pub config: ConfigFile,
    pub files: Vec<FileRecord>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `files` and the manifest into `dir`, creating it if needed.
/// `manifest.files` is overwritten with the records of `files`.
pub fn write_run(dir: &Path, mut manifest: RunManifest, files: &[OutputFile]) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(dir)?;
    manifest.files.clear();
    for f in files {
        std::fs::write(dir.join(&f.name), &f.contents)?;
        manifest.files.push(FileRecord {
            name: f.name.clone(),
            bytes: f.contents.len() as u64,
            sha256: sha256_hex(f.contents.as_bytes()),
        });
    }
    manifest.finished_unix_s = unix_now();
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(dir.join(MANIFEST_NAME), text)?;
    Ok(manifest)
}

/// Re-reads the manifest in `dir` and checks every recorded file against
/// its size and checksum.
pub fn verify(dir: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Verify(format!("{MANIFEST_NAME}: {e}")))?;
    for rec in &manifest.files {
        let bytes = std::fs::read(dir.join(&rec.name))
            .map_err(|e| CliError::Verify(format!("{}: {e}", rec.name)))?;
        if bytes.len() as u64 != rec.bytes {
            return Err(CliError::Verify(format!(
                "{}: {} bytes, manifest says {}",
                rec.name,
                bytes.len(),
                rec.bytes
            )));
        }
        let sum = sha256_hex(&bytes);
        if sum != rec.sha256 {
            return Err(CliError::Verify(format!("{}: checksum {sum} does not match", rec.name)));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunManifest {
        RunManifest {
            tool: "dicke".into(),
            version: "0.0.0".into(),
            command: "simulate".into(),
            seed: 7,
            started_unix_s: 0,
            finished_unix_s: 0,
            partial: false,
            eta: 0.08,
            config: ConfigFile::default(),
            files: Vec::new(),
        }
    }

    #[test]
    fn sha256_matches_known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn written_run_verifies_and_tampering_is_caught() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            OutputFile {
                name: "a.csv".into(),
                contents: "x,y\n1,2\n".into(),
            },
            OutputFile {
                name: "b.json".into(),
                contents: "{}\n".into(),
            },
        ];
        let m = write_run(dir.path(), sample(), &files).unwrap();
        assert_eq!(m.files.len(), 2);
        assert_eq!(verify(dir.path()).unwrap(), m);

        std::fs::write(dir.path().join("a.csv"), "x,y\n1,3\n").unwrap();
        assert!(matches!(verify(dir.path()), Err(CliError::Verify(_))));
        std::fs::remove_file(dir.path().join("a.csv")).unwrap();
        assert!(matches!(verify(dir.path()), Err(CliError::Verify(_))));
    }
}
