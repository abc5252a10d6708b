//! Records, summaries and the two output formats.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Numerical failure.
    Error,
    /// Precondition not met (an error under `--strict`).
    Skipped,
}

#[derive(Debug, Clone)]
pub struct Record {
    pub fields: Map<String, Value>,
    pub status: Status,
    pub warning: bool,
    /// Oriented inequality gap, for the summary.
    pub gap: Option<f64>,
}

impl Record {
    pub fn new(suite: &str, kind: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("suite".into(), json!(suite));
        fields.insert("kind".into(), json!(kind));
        Record { fields, status: Status::Pass, warning: false, gap: None }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.fields.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
        self
    }

    /// Merges the fields of a serializable struct.
    pub fn merge(&mut self, value: impl Serialize) -> &mut Self {
        if let Value::Object(m) = serde_json::to_value(value).expect("serializable") {
            self.fields.extend(m);
        }
        self
    }

    pub fn judge(&mut self, pass: bool) -> &mut Self {
        self.status = if pass { Status::Pass } else { Status::Fail };
        self
    }

    /// The record as emitted: fields, then `status`.
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("type".into(), json!("record"));
        m.extend(self.fields.clone());
        m.insert("status".into(), json!(self.status));
        Value::Object(m)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub n: usize,
    pub passes: usize,
    pub failures: usize,
    pub errors: usize,
    pub skipped: usize,
    pub warnings: usize,
    /// Smallest oriented gap over inequality records.
    pub worst_gap: Option<f64>,
}

impl Summary {
    pub fn of(records: &[Record]) -> Self {
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        Summary {
            n: records.len(),
            passes: count(Status::Pass),
            failures: count(Status::Fail),
            errors: count(Status::Error),
            skipped: count(Status::Skipped),
            warnings: records.iter().filter(|r| r.warning).count(),
            worst_gap: records.iter().filter_map(|r| r.gap).filter(|g| !g.is_nan()).reduce(f64::min),
        }
    }

    /// 1 on any violation, else 3 on any numerical failure, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            1
        } else if self.errors > 0 {
            3
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// JSON lines: header, records, summary.
pub fn write_json(out: &mut dyn Write, header: &Header, records: &[Record], summary: &Summary) -> std::io::Result<()> {
    let tagged = |kind: &str, v: Value| {
        let mut m = Map::new();
        m.insert("type".into(), json!(kind));
        if let Value::Object(o) = v {
            m.extend(o);
        }
        Value::Object(m)
    };
    writeln!(out, "{}", tagged("header", serde_json::to_value(header)?))?;
    for r in records {
        writeln!(out, "{}", r.to_value())?;
    }
    writeln!(out, "{}", tagged("summary", serde_json::to_value(summary)?))?;
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Records only, one row each; nested objects become dotted columns, the
/// columns being the union of keys in order of first appearance.
pub fn write_csv(out: &mut dyn Write, records: &[Record]) -> Result<(), csv::Error> {
    let rows: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut cells = Vec::new();
            flatten("", &r.to_value(), &mut cells);
            cells.retain(|(k, _)| k != "type");
            cells
        })
        .collect();
    let mut columns: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&columns)?;
    for row in &rows {
        w.write_record(columns.iter().map(|c| row.iter().find(|(k, _)| k == c).map_or("", |(_, v)| v.as_str())))?;
    }
    w.flush()?;
    Ok(())
}

/// One line per failing, erroring or skipped record, then the tallies.
pub fn human_summary(records: &[Record], summary: &Summary) -> String {
    let mut s = String::new();
    for r in records.iter().filter(|r| r.status != Status::Pass) {
        let suite = r.fields.get("suite").and_then(Value::as_str).unwrap_or("?");
        let detail = r
            .fields
            .get("error")
            .map(|e| e.as_str().map_or_else(|| e.to_string(), str::to_string))
            .or_else(|| r.gap.map(|g| format!("gap {g:e}")))
            .unwrap_or_default();
        let status = match r.status {
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
            Status::Skipped => "SKIP",
            Status::Pass => unreachable!(),
        };
        s.push_str(&format!("{status} {suite}: {detail}\n"));
    }
    s.push_str(&format!(
        "{} records: {} pass, {} fail, {} error, {} skipped, {} warnings",
        summary.n, summary.passes, summary.failures, summary.errors, summary.skipped, summary.warnings
    ));
    if let Some(g) = summary.worst_gap {
        s.push_str(&format!("; worst gap {g:e}"));
    }
    s
}
