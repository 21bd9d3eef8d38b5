//! Output-directory plumbing: artifact writing, hashing, and the
//! closing `run_config.json` + `manifest.json` pair.
//!
//! Every artifact a run produces is recorded with its SHA-256, and the
//! manifest lists them sorted by name, so two runs are byte-identical
//! exactly when their manifests are.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{Value, json};
use sha2::{Digest, Sha256};

pub struct Emitter {
    out_dir: PathBuf,
    /// Artifact name → SHA-256 hex digest.
    files: BTreeMap<String, String>,
    notes: Vec<String>,
}

impl Emitter {
    pub fn create(out_dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        Ok(Emitter {
            out_dir: out_dir.to_owned(),
            files: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Write one artifact and record its hash.
    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(name.to_owned(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    /// Record a file something else already wrote into the directory.
    pub fn add_existing(&mut self, name: &str) -> anyhow::Result<()> {
        let path = self.out_dir.join(name);
        let bytes =
            std::fs::read(&path).with_context(|| format!("hashing {}", path.display()))?;
        self.files.insert(name.to_owned(), sha256_hex(&bytes));
        Ok(())
    }

    /// Serialize a value as pretty JSON and write it as an artifact.
    pub fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .with_context(|| format!("serializing {name}"))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Attach a free-form note to the manifest.
    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Write `run_config.json` and close the run with `manifest.json`.
    pub fn finish(mut self, run_config: &Value) -> anyhow::Result<()> {
        self.write_json("run_config.json", run_config)?;
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(name, sha256)| json!({ "name": name, "sha256": sha256 }))
            .collect();
        let manifest = json!({ "files": files, "notes": self.notes });
        let mut text =
            serde_json::to_string_pretty(&manifest).context("serializing manifest.json")?;
        text.push('\n');
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, &text)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_sorted_hashed_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut emitter = Emitter::create(dir.path()).unwrap();
        emitter.write("b.csv", "x,y\n1,2\n").unwrap();
        emitter.write("a.csv", "z\n9\n").unwrap();
        emitter.note("one note");
        emitter.finish(&json!({ "subcommand": "test" })).unwrap();

        let manifest: Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        let files = manifest["files"].as_array().unwrap();
        let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
        assert_eq!(names, ["a.csv", "b.csv", "run_config.json"]);
        for file in files {
            assert_eq!(file["sha256"].as_str().unwrap().len(), 64);
        }
        assert_eq!(manifest["notes"][0], "one note");

        // Hash must match the bytes on disk.
        let bytes = std::fs::read(dir.path().join("b.csv")).unwrap();
        assert_eq!(files[1]["sha256"], sha256_hex(&bytes));
    }

    #[test]
    fn empty_sha_is_the_known_constant() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
