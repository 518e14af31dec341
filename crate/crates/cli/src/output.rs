use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::RunManifest;

/// A named pass/fail check with the quantity it was decided on.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    /// Passes when `value ≥ limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value >= limit,
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: pass as u8 as f64,
            limit: 1.0,
            pass,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    /// `# key=value` lines written before the header.
    pub preamble: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.into(),
            header,
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, w: impl Write) -> csv::Result<()> {
        let mut w = w;
        for (k, v) in &self.preamble {
            writeln!(w, "# {k}={v}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// What a command produced before it is written anywhere.
#[derive(Debug, Default)]
pub struct Outcome {
    pub model_hash: Option<String>,
    pub body: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Extra files `(name, contents)` written verbatim under `--out`.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn insert(&mut self, key: &str, v: impl Serialize) {
        self.body.insert(key.into(), serde_json::to_value(v).expect("report is serialisable"));
    }

    /// Folds a sub-result in under `key`, prefixing its check names.
    pub fn nest(&mut self, key: &str, other: Outcome) {
        self.body.insert(key.into(), Value::Object(other.body));
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{key}: {}", c.name);
            c
        }));
        self.tables.extend(other.tables);
        self.files.extend(other.files);
        if self.model_hash.is_none() {
            self.model_hash = other.model_hash;
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `report.json` and every table under `out` (when given) and the
/// primary result to standard output.
pub fn emit(
    mut manifest: RunManifest,
    outcome: &Outcome,
    out: Option<&Path>,
    format: Format,
) -> io::Result<()> {
    manifest.model_hash = outcome.model_hash.clone();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        manifest.outputs.push(path_string(&dir.join("report.json")));
        for t in &outcome.tables {
            manifest.outputs.push(path_string(&dir.join(format!("{}.csv", t.name))));
        }
        for (name, _) in &outcome.files {
            manifest.outputs.push(path_string(&dir.join(name)));
        }
    }
    let report = json!({
        "manifest": manifest,
        "passed": outcome.passed(),
        "checks": outcome.checks,
        "results": outcome.body,
    });
    let text = serde_json::to_string_pretty(&report).expect("report is serialisable") + "\n";
    if let Some(dir) = out {
        fs::write(dir.join("report.json"), &text)?;
        for t in &outcome.tables {
            let f = fs::File::create(dir.join(format!("{}.csv", t.name)))?;
            t.write(io::BufWriter::new(f)).map_err(io::Error::other)?;
        }
        for (name, contents) in &outcome.files {
            fs::write(dir.join(name), contents)?;
        }
    }
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match format {
        Format::Json => lock.write_all(text.as_bytes()),
        Format::Csv => {
            let table = outcome.tables.first().cloned().unwrap_or_else(|| checks_table(&outcome.checks));
            table.write(lock).map_err(io::Error::other)
        }
    }
}

fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new("checks", ["name", "value", "limit", "pass"].map(String::from).to_vec());
    for c in checks {
        t.push(vec![c.name.clone(), num(c.value), num(c.limit), c.pass.to_string()]);
    }
    t
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}
