use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";

fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values always serialize");
    bytes.push(b'\n');
    bytes
}

/// Output directory that hashes every file it writes.
///
/// The manifest holds no timestamps, so a rerun with the same config and
/// seeds reproduces every byte, the manifest included.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<Value>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            files: vec![],
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8], seed: Option<u64>) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files
            .push(json!({"name": name, "sha256": hex_sha256(bytes), "seed": seed}));
        Ok(())
    }

    /// Writes the effective config and the manifest listing every file written so far.
    pub fn finish(
        mut self,
        command: &str,
        config: &Value,
        seeds: &[u64],
        details: Value,
    ) -> std::io::Result<()> {
        let config_bytes = json_bytes(config);
        let config_sha256 = hex_sha256(&config_bytes);
        self.write(CONFIG_FILE, &config_bytes, None)?;
        let manifest = json!({
            "artifact": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_sha256": config_sha256,
            "seeds": seeds,
            "details": details,
            "files": self.files,
        });
        fs::write(self.dir.join(MANIFEST_FILE), json_bytes(&manifest))
    }
}
