//! Reproducibility manifests. Every command run writes one next to its
//! outputs: the exact input digests, the seed, and the tool version pin
//! down everything the results depend on. Deliberately absent: wall-clock
//! times and worker counts, which must never influence output bytes.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Input role → `sha256:<hex>` of the file bytes, sorted by role.
    pub inputs: BTreeMap<String, String>,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        Manifest {
            tool: "censim",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn record_bytes(&mut self, role: &str, bytes: &[u8]) {
        self.inputs
            .insert(role.to_string(), format!("sha256:{}", sha256_hex(bytes)));
    }

    /// Digest a file in streaming fashion; inputs can be multi-GB RIBs.
    pub fn record_file(&mut self, role: &str, path: &Path) -> Result<()> {
        let mut f = std::fs::File::open(path)?;
        let mut hasher = Sha256::new();
        let mut buf = [0u8; 64 * 1024];
        loop {
            let n = f.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
        }
        self.inputs.insert(
            role.to_string(),
            format!("sha256:{:x}", hasher.finalize()),
        );
        Ok(())
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn json_is_stable_and_sorted() {
        let mut m = Manifest::new("attack simulate");
        m.set_param("seed", 7u64);
        m.set_param("mode", "combined");
        m.record_bytes("rib", b"10.0.0.0/8\t1\n");
        m.record_bytes("as-rel", b"1|2|-1\n");
        let a = m.to_json();
        let b = m.to_json();
        assert_eq!(a, b);
        // Roles serialize sorted regardless of insertion order.
        let rib_pos = a.find("\"rib\"").unwrap();
        let rel_pos = a.find("\"as-rel\"").unwrap();
        assert!(rel_pos < rib_pos);
        assert!(a.contains("\"sha256:"));
        assert!(!a.to_lowercase().contains("time"));
        assert!(!a.contains("thread"));
    }

    #[test]
    fn file_digest_equals_bytes_digest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("input.txt");
        std::fs::write(&path, b"hello world\n").unwrap();
        let mut via_file = Manifest::new("x");
        via_file.record_file("input", &path).unwrap();
        let mut via_bytes = Manifest::new("x");
        via_bytes.record_bytes("input", b"hello world\n");
        assert_eq!(via_file.inputs, via_bytes.inputs);
    }

    #[test]
    fn write_creates_manifest_json() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("dataset synth");
        m.set_param("seed", 42u64);
        let path = m.write_to(dir.path()).unwrap();
        assert_eq!(path.file_name().unwrap(), MANIFEST_FILE);
        let body = std::fs::read_to_string(path).unwrap();
        assert_eq!(body, m.to_json());
    }
}
