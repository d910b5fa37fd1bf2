//! Optional Solidity-compiler integration: when `NN2EVM_SOLC` points at a
//! compiler, or `solc`/`solcjs` is on PATH, emitted sources can be compiled
//! and their bytecode size fed back into the deployment estimate.

use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};

/// Compiler command to use, if any: `NN2EVM_SOLC`, then `solc`, then
/// `solcjs` on PATH.
pub fn detect_compiler() -> Option<String> {
    if let Ok(path) = std::env::var("NN2EVM_SOLC") {
        if !path.is_empty() {
            return Some(path);
        }
    }
    for candidate in ["solc", "solcjs"] {
        let found = Command::new(candidate)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false);
        if found {
            return Some(candidate.to_string());
        }
    }
    None
}

/// Compiles `source` in `work_dir` and returns the bytecode size in bytes.
/// Fails on any compiler diagnostic at error severity.
pub fn compile(compiler: &str, source: &str, work_dir: &Path) -> Result<usize> {
    let sol_path = work_dir.join("contract.sol");
    std::fs::write(&sol_path, source)?;

    let output = Command::new(compiler)
        .arg("--bin")
        .arg("-o")
        .arg(work_dir)
        .arg(&sol_path)
        .current_dir(work_dir)
        .output()
        .map_err(|e| Error::Codegen(format!("failed to run {compiler}: {e}")))?;

    let stderr = String::from_utf8_lossy(&output.stderr);
    if !output.status.success() || stderr.contains("Error") {
        return Err(Error::Codegen(format!(
            "{compiler} reported errors:\n{}",
            stderr.trim()
        )));
    }

    // Both solc and solcjs drop <something>.bin files into the output dir.
    let mut bin_size = None;
    for entry in std::fs::read_dir(work_dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "bin") {
            let hex = std::fs::read_to_string(&path)?;
            let hex = hex.trim();
            if !hex.is_empty() {
                bin_size = Some(hex.len() / 2);
            }
        }
    }
    bin_size.ok_or_else(|| Error::Codegen(format!("{compiler} produced no bytecode output")))
}
