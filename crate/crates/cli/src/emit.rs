//! CSV and JSON writers. Both carry the resolved config, toolkit version and
//! config hash; CSV puts them in `#` comment lines above the column row.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) if x.is_nan() => "nan".into(),
            Cell::F(x) => format!("{x:.16e}"),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => u8::from(*b).to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::I(i) => json!(i),
            Cell::B(b) => json!(b),
            Cell::S(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn json(&self) -> Value {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

/// What a command produces: a JSON record and a table for CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub record: Value,
    pub table: Table,
    /// Whether the JSON form should embed the table.
    pub table_in_json: bool,
}

pub fn header(cfg: &ExperimentConfig) -> Value {
    json!({
        "toolkit": "icl",
        "version": icl_core::VERSION,
        "command": cfg.command(),
        "config_hash": cfg.config_hash(),
        "config": cfg.params,
    })
}

pub fn render(cfg: &ExperimentConfig, out: &Output) -> String {
    match cfg.format {
        Format::Json => {
            let mut result = out.record.clone();
            if out.table_in_json {
                if let Value::Object(m) = &mut result {
                    m.insert("table".into(), out.table.json());
                }
            }
            let doc = json!({ "header": header(cfg), "result": result });
            serde_json::to_string_pretty(&doc).expect("json serializes") + "\n"
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# toolkit: icl {}", icl_core::VERSION);
            let _ = writeln!(s, "# command: {}", cfg.command());
            let _ = writeln!(s, "# config_hash: {}", cfg.config_hash());
            let _ = writeln!(s, "# config: {}", serde_json::to_string(&cfg.params).expect("json serializes"));
            if let Value::Object(m) = &out.record {
                for (k, v) in m {
                    if !v.is_array() && !v.is_object() {
                        let _ = writeln!(s, "# {k}: {v}");
                    }
                }
            }
            s.push_str(&out.table.columns.join(","));
            s.push('\n');
            for row in &out.table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
    }
}
