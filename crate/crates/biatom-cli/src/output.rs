use crate::config::RunConfig;
use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

/// CSV table with the resolved config as a leading comment line, so any run
/// can be reproduced by feeding that line back through `--config`.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

impl CsvTable {
    pub fn render(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(config).expect("config serializes")
        ));
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// JSON document with the resolved config embedded.
pub fn render_json(config: &RunConfig, payload: serde_json::Value) -> String {
    let doc = serde_json::json!({ "config": config, "result": payload });
    let mut s = serde_json::to_string_pretty(&doc).expect("payload serializes");
    s.push('\n');
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes()).context("stdout write failed")?;
        }
    }
    Ok(())
}
