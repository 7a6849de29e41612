//! The JSON envelope every command emits.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Echo {
    pub name: String,
    pub argv: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: Tool,
    pub command: Echo,
    pub inputs: Vec<InputDigest>,
    /// `ok`, `invalid`, `infeasible` or `undecided`.
    pub status: &'static str,
    pub exit_code: u8,
    pub results: Value,
    pub timing: Timing,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads an input and records the digest of its exact bytes.
pub struct Inputs(pub Vec<InputDigest>);

impl Inputs {
    pub fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, String> {
        let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        self.0.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }
}

pub fn tool() -> Tool {
    Tool {
        name: "netoperad",
        version: env!("CARGO_PKG_VERSION"),
    }
}
