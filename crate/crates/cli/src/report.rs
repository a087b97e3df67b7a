//! Tabular reports written as CSV or JSON lines.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Field {
    /// CSV text. Floats use the shortest decimal that parses back to the same
    /// value; non-finite values are written as `inf`, `-inf` and `NaN`.
    fn csv(&self) -> String {
        match self {
            Field::Num(v) => format!("{v:?}"),
            Field::Int(v) => v.to_string(),
            Field::Bool(v) => v.to_string(),
            Field::Text(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(v) if v.is_finite() => Value::from(*v),
            Field::Num(v) => Value::String(format!("{v:?}")),
            Field::Int(v) => Value::from(*v),
            Field::Bool(v) => Value::Bool(*v),
            Field::Text(s) => Value::String(s.clone()),
            Field::Empty => Value::Null,
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<Option<f64>> for Field {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Field::Empty, Field::Num)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

/// Column names for a parameter vector: `name` when scalar, `name_1..` otherwise.
pub fn param_columns(name: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![name.to_string()]
    } else {
        (1..=dim).map(|i| format!("{name}_{i}")).collect()
    }
}

/// Fields for a parameter vector of known width; missing entries are empty.
pub fn param_fields(values: Option<&[f64]>, dim: usize) -> Vec<Field> {
    (0..dim).map(|i| values.and_then(|v| v.get(i).copied()).into()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Field::csv))?;
                }
                w.flush()
            }
            Format::Json => {
                for row in &self.rows {
                    let obj: Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Field::json)).collect();
                    serde_json::to_writer(&mut *out, &obj)?;
                    out.write_all(b"\n")?;
                }
                out.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn render(table: &Table, format: Format) -> String {
        let mut buf = Vec::new();
        table.write(format, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_and_json_layouts() {
        let mut t = Table::new(vec!["record".into(), "theta".into(), "ok".into(), "note".into()]);
        t.push(vec!["mle".into(), 1.0.into(), true.into(), Field::Empty]);
        t.push(vec!["x".into(), f64::NEG_INFINITY.into(), false.into(), "a,b".into()]);
        assert_eq!(render(&t, Format::Csv), "record,theta,ok,note\nmle,1.0,true,\nx,-inf,false,\"a,b\"\n");
        assert_eq!(
            render(&t, Format::Json),
            "{\"record\":\"mle\",\"theta\":1.0,\"ok\":true,\"note\":null}\n\
             {\"record\":\"x\",\"theta\":\"-inf\",\"ok\":false,\"note\":\"a,b\"}\n"
        );
    }

    #[test]
    fn param_columns_flatten() {
        assert_eq!(param_columns("theta_hat", 1), vec!["theta_hat"]);
        assert_eq!(param_columns("t", 2), vec!["t_1", "t_2"]);
        assert_eq!(param_fields(None, 2), vec![Field::Empty, Field::Empty]);
    }

    proptest! {
        #[test]
        fn csv_floats_round_trip(v in prop::num::f64::ANY) {
            let text = Field::Num(v).csv();
            let back: f64 = text.parse().unwrap();
            prop_assert!(back.to_bits() == v.to_bits() || (back.is_nan() && v.is_nan()));
        }
    }
}
