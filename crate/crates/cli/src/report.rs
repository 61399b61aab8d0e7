//! Deterministic report assembly and atomic emission.

use crate::{CliError, CliResult};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Round to 12 significant digits so serialized floats are short and diffs
/// are meaningful.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let d = x.abs().log10().floor();
    let f = 10f64.powf(11.0 - d);
    (x * f).round() / f
}

/// Fixed-format float for CSV cells (12 significant digits).
pub fn fmt_f(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:e}", round_sig(x));
    s
}

pub fn jf(x: f64) -> Value {
    match serde_json::Number::from_f64(round_sig(x)) {
        Some(n) => Value::Number(n),
        None => Value::String(fmt_f(x)),
    }
}

/// Content hash of the inputs (config bytes plus referenced files).
pub fn content_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// One named check with a pass flag.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

/// Assembled run report; serialization sorts keys (serde_json maps are
/// B-tree backed) and carries no wall-clock content.
pub struct RunReport {
    pub command: String,
    pub config_echo: Value,
    pub input_hash: String,
    pub checks: Vec<Check>,
    pub metrics: Map<String, Value>,
    pub tables: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config_echo: Value, input_hash: String) -> Self {
        RunReport {
            command: command.into(),
            config_echo,
            input_hash,
            checks: Vec::new(),
            metrics: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: Value) {
        self.checks.push(Check { name: name.into(), pass, detail });
    }

    pub fn metric(&mut self, name: &str, value: Value) {
        self.metrics.insert(name.into(), value);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_value(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
            .collect();
        json!({
            "command": self.command,
            "config": self.config_echo,
            "input_hash": self.input_hash,
            "checks": checks,
            "metrics": Value::Object(self.metrics.clone()),
            "tables": self.tables,
        })
    }

    /// Write `report.json` (atomic: temp file + rename).
    pub fn write(&self, out_dir: &Path) -> CliResult<std::path::PathBuf> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
        let path = out_dir.join("report.json");
        let text = serde_json::to_string_pretty(&self.to_value())
            .map_err(|e| CliError::Numeric(format!("report serialization: {e}")))?
            + "\n";
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Data(format!("cannot rename into {}: {e}", path.display())))?;
    Ok(())
}

/// Write a CSV table (header + formatted rows), atomically.
pub fn write_csv(
    out_dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> CliResult<String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    atomic_write(&out_dir.join(name), text.as_bytes())?;
    Ok(name.to_string())
}
