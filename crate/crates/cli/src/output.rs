//! CSV and JSON rendering with a fixed column layout.
//!
//! CSV floats use 17 significant digits. JSON documents carry
//! `"schema": 1`. Non-finite numbers are refused rather than written.

use std::str::FromStr;

use serde_json::{Map, Number};
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("expected csv or json, found `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
    /// Not applicable in this row: an empty CSV field, JSON `null`.
    Empty,
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Empty, Value::Num)
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("refusing to write non-finite value {value} in `{field}`")]
    NonFinite { field: String, value: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn finite(field: &str, v: f64) -> Result<f64, OutputError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(OutputError::NonFinite {
            field: field.to_string(),
            value: v,
        })
    }
}

fn csv_field(field: &str, v: &Value) -> Result<String, OutputError> {
    Ok(match v {
        Value::Num(x) => format!("{:.16e}", finite(field, *x)?),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
        Value::List(xs) => xs
            .iter()
            .map(|x| finite(field, *x).map(|x| format!("{x:.16e}")))
            .collect::<Result<Vec<_>, _>>()?
            .join(";"),
        Value::Empty => String::new(),
    })
}

fn json_value(field: &str, v: &Value) -> Result<serde_json::Value, OutputError> {
    let num = |x: f64| -> Result<serde_json::Value, OutputError> {
        Ok(serde_json::Value::Number(
            Number::from_f64(finite(field, x)?).expect("finite checked"),
        ))
    };
    Ok(match v {
        Value::Num(x) => num(*x)?,
        Value::Int(i) => serde_json::Value::from(*i),
        Value::Bool(b) => serde_json::Value::Bool(*b),
        Value::Text(s) => serde_json::Value::String(s.clone()),
        Value::List(xs) => {
            serde_json::Value::Array(xs.iter().map(|x| num(*x)).collect::<Result<_, _>>()?)
        }
        Value::Empty => serde_json::Value::Null,
    })
}

fn json_object(pairs: &[(&str, Value)]) -> Result<serde_json::Value, OutputError> {
    let mut map = Map::new();
    for (k, v) in pairs {
        map.insert((*k).to_string(), json_value(k, v)?);
    }
    Ok(serde_json::Value::Object(map))
}

/// One output file: echoed config, data rows, summary and optional
/// extra top-level JSON blocks.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub config: Vec<(&'static str, Value)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Vec<(&'static str, Value)>,
    pub extra: Vec<(&'static str, Vec<(&'static str, Value)>)>,
}

impl Document {
    pub fn render(&self, format: Format) -> Result<String, OutputError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> Result<String, OutputError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            let fields = self
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| csv_field(c, v))
                .collect::<Result<Vec<_>, _>>()?;
            w.write_record(&fields)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn to_json(&self) -> Result<String, OutputError> {
        let mut root = Map::new();
        root.insert("schema".into(), SCHEMA_VERSION.into());
        root.insert("config".into(), json_object(&self.config)?);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let pairs: Vec<(&str, Value)> = self
                    .columns
                    .iter()
                    .copied()
                    .zip(row.iter().cloned())
                    .collect();
                json_object(&pairs)
            })
            .collect::<Result<Vec<_>, _>>()?;
        root.insert("rows".into(), serde_json::Value::Array(rows));
        root.insert("summary".into(), json_object(&self.summary)?);
        for (name, block) in &self.extra {
            root.insert((*name).to_string(), json_object(block)?);
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root))?;
        text.push('\n');
        Ok(text)
    }

    /// Summary as `key: value` lines for the terminal.
    pub fn summary_text(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| {
                let shown = match v {
                    Value::Num(x) => format!("{x:.6e}"),
                    Value::Empty => "-".into(),
                    other => csv_field(k, other).unwrap_or_else(|e| e.to_string()),
                };
                format!("{k}: {shown}\n")
            })
            .collect()
    }
}
