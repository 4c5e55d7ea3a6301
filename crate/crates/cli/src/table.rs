//! Row-oriented result tables written as CSV or JSON.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::FormatArg;
use crate::CliError;

/// One output row; column order is insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row(Map<String, Value>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    /// Sets a float column, writing non-finite values as strings.
    pub fn num(self, key: &str, x: f64) -> Self {
        let v = if x.is_finite() {
            Value::from(x)
        } else if x.is_nan() {
            Value::from("nan")
        } else if x > 0.0 {
            Value::from("inf")
        } else {
            Value::from("-inf")
        };
        self.set(key, v)
    }

    /// Appends `other`'s columns.
    pub fn extend(mut self, other: Row) -> Self {
        self.0.extend(other.0);
        self
    }

    pub fn opt_num(self, key: &str, x: Option<f64>) -> Self {
        match x {
            Some(x) => self.num(key, x),
            None => self.set(key, Value::Null),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub rows: Vec<Row>,
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

impl Table {
    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Union of all row keys in first-seen order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for row in &self.rows {
            for k in row.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let cols = self.columns();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&cols)?;
        for row in &self.rows {
            w.write_record(cols.iter().map(|c| cell(row.get(c))))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(r.0.clone()))
            .collect();
        serde_json::to_writer_pretty(&mut out, &rows).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, format: FormatArg, out: W) -> Result<(), CliError> {
        match format {
            FormatArg::Csv => self.write_csv(out),
            FormatArg::Json => self.write_json(out),
        }
    }

    /// Column values as strings, for tests and summaries.
    pub fn column(&self, key: &str) -> Vec<String> {
        self.rows.iter().map(|r| cell(r.get(key))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_union_header() {
        let mut t = Table::default();
        t.push(Row::new().set("a", 1).num("b", 0.5));
        t.push(Row::new().set("a", 2).set("c", "x").num("b", f64::INFINITY));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "a,b,c\n1,0.5,\n2,inf,x\n");
    }

    #[test]
    fn json_keeps_order() {
        let mut t = Table::default();
        t.push(Row::new().set("z", 1).set("a", "s"));
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.find("\"z\"").unwrap() < s.find("\"a\"").unwrap());
    }
}
