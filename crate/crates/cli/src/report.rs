use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Everything one command produces: summary lines, contract verdicts and CSV files.
#[derive(Default)]
pub struct RunReport {
    lines: Vec<String>,
    contracts: Vec<(String, bool)>,
    files: Vec<(String, Vec<u8>)>,
}

impl RunReport {
    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    pub fn contract(&mut self, name: impl Into<String>, pass: bool) {
        self.contracts.push((name.into(), pass));
    }

    pub fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Writes a CSV through `fill`, which receives the in-memory buffer.
    pub fn csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> shieldlab::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf).with_context(|| format!("writing {name}"))?;
        self.file(name, buf);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.contracts.iter().all(|(_, ok)| *ok)
    }

    fn contract_lines(&self) -> Vec<String> {
        self.contracts.iter().map(|(name, ok)| format!("{name}: {}", if *ok { "PASS" } else { "FAIL" })).collect()
    }

    /// Prints the summary to stdout and the contracts to stderr, and saves
    /// every file plus `summary.txt` under `out` when given.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        for l in &self.lines {
            println!("{l}");
        }
        let contracts = self.contract_lines();
        for l in &contracts {
            eprintln!("{l}");
        }
        if let Some(dir) = out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, bytes) in &self.files {
                let path = dir.join(name);
                fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            }
            let mut summary = self.lines.join("\n");
            for l in &contracts {
                summary.push('\n');
                summary.push_str(l);
            }
            summary.push('\n');
            fs::write(dir.join("summary.txt"), summary).context("writing summary.txt")?;
        }
        Ok(())
    }
}
