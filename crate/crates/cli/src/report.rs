//! Reports with a fixed field order, printed as text or JSON.

use serde_json::{json, Map, Value};

use crate::input::InputDigest;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub results: Vec<(String, Value)>,
    pub verdicts: Vec<Verdict>,
    pub status: Option<String>,
}

impl Report {
    pub fn new(command: String) -> Self {
        Report { command, inputs: Vec::new(), results: Vec::new(), verdicts: Vec::new(), status: None }
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.results.push((key.into(), value.into()));
    }

    pub fn verdict(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.into(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    fn status_line(&self) -> String {
        match &self.status {
            Some(s) => s.clone(),
            None if self.all_passed() => "ok".into(),
            None => "invariant violation".into(),
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("command: {}\n", self.command);
        for d in &self.inputs {
            out += &format!("input: {} sha256:{}\n", d.path, d.sha256);
        }
        for (k, v) in &self.results {
            match v {
                Value::String(s) => out += &format!("{k}: {s}\n"),
                Value::Array(rows) if rows.iter().all(Value::is_string) => {
                    out += &format!("{k}:\n");
                    for r in rows {
                        out += &format!("  {}\n", r.as_str().unwrap_or_default());
                    }
                }
                other => out += &format!("{k}: {other}\n"),
            }
        }
        for v in &self.verdicts {
            let tag = if v.passed { "PASS" } else { "FAIL" };
            out += &format!("{tag} {}: {}\n", v.name, v.detail);
        }
        out += &format!("status: {}\n", self.status_line());
        out
    }

    pub fn render_json(&self) -> String {
        let mut results = Map::new();
        for (k, v) in &self.results {
            results.insert(k.clone(), v.clone());
        }
        let doc = json!({
            "command": self.command,
            "inputs": self.inputs.iter().map(|d| json!({"path": d.path, "sha256": d.sha256})).collect::<Vec<_>>(),
            "results": results,
            "verdicts": self.verdicts.iter().map(|v| json!({"name": v.name, "passed": v.passed, "detail": v.detail})).collect::<Vec<_>>(),
            "status": self.status_line(),
        });
        let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
        s.push('\n');
        s
    }
}

/// Fixed scientific formatting; negative zero prints as zero.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.12e}")
}

pub fn complex(z: cechlab_core::C64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    format!("{} {}{:.12e}i", num(z.re), if im < 0.0 { "-" } else { "+" }, im.abs())
}
