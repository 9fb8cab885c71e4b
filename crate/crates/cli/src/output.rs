//! Payload envelope, schema validation, and the files each command writes.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schemas shipped with the binary, keyed by command name.
pub const SCHEMAS: &[(&str, &str)] = &[
    ("classify", include_str!("../schemas/classify.schema.json")),
    ("table1", include_str!("../schemas/table1.schema.json")),
    (
        "boundaries",
        include_str!("../schemas/boundaries.schema.json"),
    ),
    (
        "msh-check",
        include_str!("../schemas/msh-check.schema.json"),
    ),
    ("lelong", include_str!("../schemas/lelong.schema.json")),
    (
        "slice-index",
        include_str!("../schemas/slice-index.schema.json"),
    ),
    (
        "exceptional-scan",
        include_str!("../schemas/exceptional-scan.schema.json"),
    ),
    (
        "directional",
        include_str!("../schemas/directional.schema.json"),
    ),
    ("verify", include_str!("../schemas/verify.schema.json")),
    ("manifest", include_str!("../schemas/manifest.schema.json")),
];

pub fn schema(name: &str) -> Value {
    let text = SCHEMAS
        .iter()
        .find(|(k, _)| *k == name)
        .map(|(_, s)| *s)
        .unwrap_or_else(|| panic!("no schema for {name}"));
    serde_json::from_str(text).unwrap_or_else(|e| panic!("schema {name} is not JSON: {e}"))
}

pub fn validate(name: &str, instance: &Value) -> Result<(), String> {
    jsonschema::validate(&schema(name), instance)
        .map_err(|e| format!("{name} payload fails its schema: {e}"))
}

/// Everything a command produces before it is written out.
pub struct Report {
    pub command: &'static str,
    pub statement: &'static str,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub result: Value,
    pub csv: Table,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_bytes(&self) -> Result<Vec<u8>, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }
}

pub fn cell<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

pub fn opt_cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `re:im` pairs joined by `;`.
pub fn pairs_cell(v: &[[f64; 2]]) -> String {
    v.iter()
        .map(|[re, im]| format!("{re}:{im}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

impl Report {
    pub fn payload(&self) -> Value {
        json!({
            "command": self.command,
            "statement": self.statement,
            "parameters": self.parameters,
            "seed": self.seed,
            "result": self.result,
        })
    }

    /// Validates and writes `<command>.json`, `<command>.csv` and
    /// `<command>.manifest.json` under `dir`; returns the JSON text.
    pub fn write(&self, dir: &Path, wall_time: f64) -> Result<String, String> {
        let payload = self.payload();
        validate(self.command, &payload)?;
        let text = serde_json::to_string_pretty(&payload).map_err(|e| e.to_string())? + "\n";
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let json_path = dir.join(format!("{}.json", self.command));
        let csv_path = dir.join(format!("{}.csv", self.command));
        let manifest_path = dir.join(format!("{}.manifest.json", self.command));
        write_file(&json_path, text.as_bytes())?;
        write_file(&csv_path, &self.csv.to_bytes()?)?;
        let manifest = json!({
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": VERSION,
            "wall_time_seconds": wall_time,
            "outputs": {
                "json": path_string(&json_path),
                "csv": path_string(&csv_path),
            },
        });
        validate("manifest", &manifest)?;
        let m = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())? + "\n";
        write_file(&manifest_path, m.as_bytes())?;
        Ok(text)
    }
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
