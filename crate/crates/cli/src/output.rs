//! Output headers and writers. Every document starts with the tool version,
//! the subcommand, its resolved configuration and the seed.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Res;

pub const TOOL: &str = "brwcrit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Header {
    command: &'static str,
    config: Value,
    resolved: Map<String, Value>,
    seed: Option<u64>,
}

impl Header {
    pub fn new(command: &'static str, args: &impl Serialize, seed: Option<u64>) -> Res<Self> {
        Ok(Self {
            command,
            config: serde_json::to_value(args)?,
            resolved: Map::new(),
            seed,
        })
    }

    /// Records a value the run settled on (defaults, window, boundary).
    pub fn resolve(&mut self, key: &str, value: impl Serialize) -> Res<()> {
        self.resolved.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "resolved": self.resolved,
            "seed": self.seed,
        })
    }

    fn comment_lines(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# tool: {TOOL} {VERSION}\n# command: {}\n# config: {}\n# resolved: {}\n# seed: {seed}\n",
            self.command,
            self.config,
            Value::Object(self.resolved.clone()),
        )
    }

    /// Header comment lines, then `notes` as `# key: json` lines, then the table.
    pub fn csv(&self, notes: &[(&str, Value)], columns: &[&str], rows: &[Vec<String>]) -> Res<String> {
        let mut out = self.comment_lines();
        for (key, value) in notes {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        let body = w.into_inner().map_err(|e| e.to_string())?;
        out.push_str(&String::from_utf8(body).map_err(|e| e.to_string())?);
        Ok(out)
    }

    pub fn json(&self, result: &impl Serialize) -> Res<String> {
        let doc = json!({ "header": self.to_value(), "result": serde_json::to_value(result)? });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }
}

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes; `inf` for infinities.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn emit(path: Option<&Path>, text: &str) -> Res<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
