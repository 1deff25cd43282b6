//! Report envelope written by every subcommand.
//!
//! The `metadata` section isolates everything non-deterministic (timestamp);
//! `config` echoes the fully resolved configuration and `results` the
//! numbers, so two runs of the same bundle produce byte-identical files
//! outside `metadata`.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub struct Report {
    pub command: String,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    pub fn new<C: Serialize>(command: &str, config: &C, results: serde_json::Value) -> Report {
        Report {
            command: command.into(),
            config: serde_json::to_value(config).expect("config serializes"),
            results,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            pass,
            detail,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "metadata": {
                "timestamp_unix_ms": std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_millis() as u64)
                    .unwrap_or(0),
                "version": kpz_core::VERSION,
            },
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "checks": self.checks,
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create {}", out_dir.display()))?;
        let path = out_dir.join(format!("{}_report.json", self.command));
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
