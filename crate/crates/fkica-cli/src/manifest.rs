//! Run manifests: every output directory gets exactly one `manifest.txt`
//! recording the subcommand, the fully resolved configuration, the seed,
//! the library version and SHA-256 digests of every input file. The
//! timestamp is the only clock-dependent field, so two runs with the same
//! inputs differ in at most that line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::CliError;

fn sha256_hex(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

/// Writes `manifest.txt` into `out_dir`.
///
/// `config_block` holds the resolved configuration as `key = value` lines;
/// `inputs` pairs a display name with the path whose digest is recorded.
pub fn write_manifest(
    out_dir: &Path,
    subcommand: &str,
    seed: Option<u64>,
    config_block: &str,
    inputs: &[(&str, &Path)],
) -> Result<(), CliError> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "subcommand = {subcommand}");
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "timestamp_unix = {timestamp}");
    if let Some(seed) = seed {
        let _ = writeln!(out, "seed = {seed}");
    }
    for (name, path) in inputs {
        let digest = sha256_hex(path)
            .map_err(|e| CliError::new(3, format!("digesting {}: {e}", path.display())))?;
        let _ = writeln!(out, "input = {digest}  {name}");
    }
    out.push_str("config:\n");
    for line in config_block.lines() {
        let _ = writeln!(out, "  {line}");
    }
    fs::write(out_dir.join("manifest.txt"), out)
        .map_err(|e| CliError::new(3, format!("writing manifest: {e}")))?;
    Ok(())
}
