use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

pub const ARTIFACT: &str = "veronese";

/// Wall-clock figures; the only fields allowed to differ between two runs
/// with the same configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_ms: u128,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub results: Value,
    pub timing: Timing,
}

/// Rows for the CSV output of a command.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// One `path,value` row per JSON leaf.
    pub fn flatten(value: &Value) -> Self {
        let mut t = Table::new(&["field", "value"]);
        fn walk(prefix: String, v: &Value, t: &mut Table) {
            match v {
                Value::Object(map) => {
                    for (k, x) in map {
                        let p = if prefix.is_empty() {
                            k.clone()
                        } else {
                            format!("{prefix}.{k}")
                        };
                        walk(p, x, t);
                    }
                }
                Value::Array(items) => {
                    for (i, x) in items.iter().enumerate() {
                        walk(format!("{prefix}[{i}]"), x, t);
                    }
                }
                Value::String(s) => t.push(vec![prefix, s.clone()]),
                other => t.push(vec![prefix, other.to_string()]),
            }
        }
        walk(String::new(), value, &mut t);
        t
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}
