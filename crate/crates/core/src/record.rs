//! Flat result records and their CSV/JSON export.
//!
//! A [`RecordTable`] fixes the column order up front, so an empty table
//! still exports a header. Floats are written with 17 significant digits
//! (`{:.16e}`), which round-trips every finite `f64` exactly.

use std::io::Write;

use crate::certificate::Certificate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    /// Empty CSV cell, JSON `null`.
    Null,
}

impl Value {
    fn csv_cell(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_float(*x),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(x) if x.is_finite() => format_float(*x),
            Value::Float(_) | Value::Null => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => serde_json::to_string(s).expect("strings always serialize"),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        // seeds above i64::MAX keep their bits as text
        i64::try_from(x).map_or_else(|_| Value::Text(x.to_string()), Value::Int)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.into())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(x: Option<T>) -> Self {
        x.map_or(Value::Null, Into::into)
    }
}

/// 17 significant digits; `inf`, `-inf` and `NaN` for the rest.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Ordered key-value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRecord {
    fields: Vec<(String, Value)>,
}

impl ResultRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.fields.push((key.into(), value.into()));
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.push(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(k, _)| k.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.fields.iter().map(|(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Keys of a certificate record, in order.
pub const CERTIFICATE_FIELDS: [&str; 24] = [
    "b",
    "s",
    "beta",
    "h",
    "law",
    "seed",
    "pool",
    "trials",
    "conservative",
    "k",
    "n",
    "r_k",
    "log_r_k",
    "var_k",
    "var_k_std_err",
    "cond15_lhs",
    "cond15_ok",
    "p_good",
    "p_good_raw",
    "p_good_std_err",
    "mean_first_good",
    "log_pkn",
    "log_qn",
    "bound",
];

impl From<&Certificate> for ResultRecord {
    fn from(c: &Certificate) -> Self {
        ResultRecord::new()
            .with("b", c.b)
            .with("s", c.s)
            .with("beta", c.beta)
            .with("h", c.h)
            .with("law", c.law.as_str())
            .with("seed", c.seed)
            .with("pool", c.pool_size)
            .with("trials", c.trials)
            .with("conservative", c.conservative)
            .with("k", c.k)
            .with("n", c.n)
            .with("r_k", c.r_k)
            .with("log_r_k", c.log_r_k)
            .with("var_k", c.var_k)
            .with("var_k_std_err", c.var_k_std_err)
            .with("cond15_lhs", c.cond15_lhs)
            .with("cond15_ok", c.cond15_ok)
            .with("p_good", c.p_good)
            .with("p_good_raw", c.p_good_raw)
            .with("p_good_std_err", c.p_good_std_err)
            .with("mean_first_good", c.mean_first_good)
            .with("log_pkn", c.log_pkn)
            .with("log_qn", c.log_qn)
            .with("bound", c.bound)
    }
}

/// Records sharing one column order.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    columns: Vec<String>,
    rows: Vec<ResultRecord>,
}

impl RecordTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[ResultRecord] {
        &self.rows
    }

    /// Rejects a record whose keys differ from the columns, in order.
    pub fn push(&mut self, record: ResultRecord) -> Result<()> {
        if !record.keys().eq(self.columns.iter().map(String::as_str)) {
            let got: Vec<&str> = record.keys().collect();
            return Err(Error::InvalidParams(format!(
                "record keys {got:?} do not match columns {:?}",
                self.columns
            )));
        }
        self.rows.push(record);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns).map_err(io_error)?;
        for row in &self.rows {
            w.write_record(row.values().map(Value::csv_cell))
                .map_err(io_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        if self.rows.is_empty() {
            out.write_all(b"[]\n")?;
            return Ok(());
        }
        out.write_all(b"[\n")?;
        for (i, row) in self.rows.iter().enumerate() {
            let body: Vec<String> = row
                .fields
                .iter()
                .map(|(k, v)| format!("{}: {}", Value::Text(k.clone()).json(), v.json()))
                .collect();
            let sep = if i + 1 < self.rows.len() { "," } else { "" };
            writeln!(out, "  {{{}}}{sep}", body.join(", "))?;
        }
        out.write_all(b"]\n")?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("cells are utf-8")
    }

    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("cells are utf-8")
    }
}

fn io_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> RecordTable {
        let mut t = RecordTable::new(["name", "x", "n", "ok", "missing"]);
        t.push(
            ResultRecord::new()
                .with("name", "a,\"b\"")
                .with("x", 0.1 + 0.2)
                .with("n", 7usize)
                .with("ok", true)
                .with("missing", Option::<f64>::None),
        )
        .unwrap();
        t
    }

    #[test]
    fn empty_tables() {
        let t = RecordTable::new(["a", "b"]);
        assert_eq!(t.to_csv_string(), "a,b\n");
        assert_eq!(t.to_json_string(), "[]\n");
    }

    #[test]
    fn csv_round_trip() {
        let s = table().to_csv_string();
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let row = r.records().next().unwrap().unwrap();
        assert_eq!(&row[0], "a,\"b\"");
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(&row[2], "7");
        assert_eq!(&row[4], "");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn json_round_trip() {
        let s = table().to_json_string();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let obj = &v[0];
        assert_eq!(obj["name"], "a,\"b\"");
        assert_eq!(obj["x"].as_f64().unwrap(), 0.1 + 0.2);
        assert_eq!(obj["n"], 7);
        assert_eq!(obj["ok"], true);
        assert!(obj["missing"].is_null());
    }

    #[test]
    fn float_digits() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
        for x in [std::f64::consts::PI, 5e-324, f64::MAX, -1.0 / 3.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn mismatched_keys_rejected() {
        let mut t = RecordTable::new(["a", "b"]);
        assert!(t
            .push(ResultRecord::new().with("b", 1.0).with("a", 2.0))
            .is_err());
        assert!(t.push(ResultRecord::new().with("a", 1.0)).is_err());
        assert!(t
            .push(ResultRecord::new().with("a", 1.0).with("b", 2.0))
            .is_ok());
    }

    #[test]
    fn large_seed_kept_exact() {
        assert_eq!(
            Value::from(u64::MAX),
            Value::Text("18446744073709551615".into())
        );
        assert_eq!(Value::from(42u64), Value::Int(42));
    }

    #[test]
    fn certificate_keys_match_constant() {
        let c = Certificate {
            b: 2,
            s: 2,
            beta: 1.0,
            h: 0.5,
            law: "gaussian".into(),
            seed: 1,
            pool_size: 10,
            trials: 10,
            conservative: true,
            k: 1,
            n: 3,
            r_k: 1.0,
            log_r_k: 0.0,
            var_k: 0.0,
            var_k_std_err: 0.0,
            cond15_lhs: 0.0,
            cond15_ok: true,
            p_good: 1.0,
            p_good_raw: 1.0,
            p_good_std_err: 0.0,
            mean_first_good: 1.0,
            log_pkn: 0.0,
            log_qn: 0.0,
            bound: 0.0,
        };
        assert!(ResultRecord::from(&c).keys().eq(CERTIFICATE_FIELDS));
    }
}
