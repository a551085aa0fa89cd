//! Reports: ordered sections, each with human-readable lines and structured
//! data, rendered as aligned text or as JSON.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    InputError,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::InputError => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub name: String,
    #[serde(skip)]
    pub lines: Vec<String>,
    pub data: Value,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), lines: Vec::new(), data: Value::Null }
    }

    pub fn line(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }

    pub fn lines(mut self, lines: impl IntoIterator<Item = String>) -> Self {
        self.lines.extend(lines);
        self
    }

    pub fn data(mut self, data: impl Serialize) -> Self {
        self.data = serde_json::to_value(data).unwrap_or(Value::Null);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub input: String,
    pub input_sha256: String,
    pub outcome: Outcome,
    pub exit_code: u8,
    /// Mathematical checks that failed, in the order they ran.
    pub failures: Vec<String>,
    /// Set when the input could not be used.
    pub error: Option<String>,
    pub sections: Vec<Section>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Report {
    pub fn new(command: &str, input: &str, source: &[u8]) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input: input.to_string(),
            input_sha256: sha256_hex(source),
            outcome: Outcome::Pass,
            exit_code: 0,
            failures: Vec::new(),
            error: None,
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    /// Record a failed check; the outcome becomes `fail` unless the input
    /// was already rejected.
    pub fn fail(&mut self, what: impl Into<String>) {
        self.failures.push(what.into());
        if self.outcome == Outcome::Pass {
            self.set(Outcome::Fail);
        }
    }

    /// Mark the whole run as an input error.
    pub fn reject(&mut self, message: impl Into<String>) {
        self.error = Some(message.into());
        self.set(Outcome::InputError);
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.fail(what);
        }
    }

    fn set(&mut self, outcome: Outcome) {
        self.outcome = outcome;
        self.exit_code = outcome.exit_code();
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_human(&self) -> String {
        let mut out = format!(
            "{} {}  {}  {}  sha256:{}\n",
            self.tool,
            self.version,
            self.command,
            self.input,
            &self.input_sha256[..16]
        );
        for s in &self.sections {
            out.push_str(&format!("\n== {} ==\n", s.name));
            for l in &s.lines {
                out.push_str(l);
                out.push('\n');
            }
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("\nerror: {e}\n"));
        }
        if !self.failures.is_empty() {
            out.push_str("\nfailed checks:\n");
            for f in &self.failures {
                out.push_str(&format!("  - {f}\n"));
            }
        }
        let word = match self.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::InputError => "input error",
        };
        out.push_str(&format!("\nresult: {word} (exit {})\n", self.exit_code));
        out
    }
}

/// Left-aligned text columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> Vec<String> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.chars().count());
            } else {
                widths.push(cell.chars().count());
            }
        }
    }
    let render = |cells: Vec<&str>| {
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                line.push_str(c);
            } else {
                line.push_str(&format!("{c:<w$}  ", w = widths[i]));
            }
        }
        line.trim_end().to_string()
    };
    let mut out = vec![render(header.to_vec())];
    out.extend(rows.iter().map(|r| render(r.iter().map(String::as_str).collect())));
    out
}

/// Table rows as JSON objects keyed by `keys`.
pub fn records(keys: &[&str], rows: &[Vec<String>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|row| keys.iter().zip(row).map(|(k, v)| (k.to_string(), Value::String(v.clone()))).collect())
            .collect(),
    )
}

/// `key  value` lines with the keys padded to a common width.
pub fn fields(pairs: &[(&str, String)]) -> Vec<String> {
    let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    pairs.iter().map(|(k, v)| format!("{k:<w$}  {v}")).collect()
}
