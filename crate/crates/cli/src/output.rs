//! Flat records written as newline-delimited JSON or sectioned CSV.
//!
//! Every file opens with a header record echoing the tool version and the
//! resolved configuration. CSV puts the header in `#` comment lines and
//! starts each block of records with `# section=<name>` and a column row.

use std::io::{self, Write};

use serde_json::{Map, Number, Value as Json};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    MaybeFloat(Option<f64>),
    Int(u64),
    Text(String),
    Flag(bool),
    Floats(Vec<f64>),
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        Value::MaybeFloat(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as u64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Flag(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// Ordered field list; every record of a section shares the same keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(pub Vec<(&'static str, Value)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.0.push((key, value.into()));
        self
    }

    pub fn push(&mut self, key: &'static str, value: impl Into<Value>) {
        self.0.push((key, value.into()));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: &'static str,
    pub records: Vec<Record>,
}

/// 17 significant digits, enough to round-trip any double.
fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Float(x) => csv_float(*x),
        Value::MaybeFloat(x) => x.map(csv_float).unwrap_or_default(),
        Value::Int(n) => n.to_string(),
        Value::Text(s) => s.clone(),
        Value::Flag(b) => b.to_string(),
        Value::Floats(xs) => xs
            .iter()
            .map(|&x| csv_float(x))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

fn json_float(x: f64) -> Json {
    Number::from_f64(x).map(Json::Number).unwrap_or(Json::Null)
}

fn json_field(v: &Value) -> Json {
    match v {
        Value::Float(x) => json_float(*x),
        Value::MaybeFloat(x) => x.map(json_float).unwrap_or(Json::Null),
        Value::Int(n) => Json::from(*n),
        Value::Text(s) => Json::from(s.as_str()),
        Value::Flag(b) => Json::from(*b),
        Value::Floats(xs) => Json::Array(xs.iter().map(|&x| json_float(x)).collect()),
    }
}

fn json_line(out: &mut dyn Write, kind: &str, record: &Record) -> io::Result<()> {
    let mut map = Map::new();
    map.insert("record".into(), Json::from(kind));
    for (k, v) in &record.0 {
        map.insert((*k).into(), json_field(v));
    }
    serde_json::to_writer(&mut *out, &Json::Object(map))?;
    writeln!(out)
}

pub fn write_document(
    out: &mut dyn Write,
    format: Format,
    header: &Record,
    sections: &[Section],
) -> io::Result<()> {
    match format {
        Format::Json => {
            json_line(out, "header", header)?;
            for section in sections {
                for record in &section.records {
                    json_line(out, section.name, record)?;
                }
            }
        }
        Format::Csv => {
            for (k, v) in &header.0 {
                writeln!(out, "# {k}={}", csv_field(v))?;
            }
            for section in sections {
                writeln!(out, "# section={}", section.name)?;
                let Some(first) = section.records.first() else {
                    continue;
                };
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(first.0.iter().map(|(k, _)| *k))?;
                for record in &section.records {
                    w.write_record(record.0.iter().map(|(_, v)| csv_field(v)))?;
                }
                w.flush()?;
            }
        }
    }
    out.flush()
}
