//! Result rows and their CSV / JSON encodings.

use std::cmp::Ordering;
use std::io::Write;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

pub const COLUMNS: [&str; 17] = [
    "experiment_id",
    "measure",
    "perturbation",
    "seed",
    "x0",
    "n",
    "re_a",
    "im_a",
    "re_b",
    "im_b",
    "mode",
    "value_re",
    "value_im",
    "target_re",
    "target_im",
    "abs_err",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment_id: String,
    pub measure: String,
    pub perturbation: String,
    pub seed: Option<u64>,
    pub x0: f64,
    pub n: usize,
    pub a: Complex64,
    pub b: Complex64,
    pub mode: String,
    pub value: Option<Complex64>,
    pub target: Option<Complex64>,
    pub abs_err: Option<f64>,
    /// `ok`, `flagged`, `fail`, or `error: <message>`.
    pub status: String,
}

impl Row {
    pub fn is_error(&self) -> bool {
        self.status.starts_with("error")
    }

    fn key_cmp(&self, other: &Row) -> Ordering {
        self.x0
            .total_cmp(&other.x0)
            .then(self.n.cmp(&other.n))
            .then(self.a.re.total_cmp(&other.a.re))
            .then(self.a.im.total_cmp(&other.a.im))
            .then(self.b.re.total_cmp(&other.b.re))
            .then(self.b.im.total_cmp(&other.b.im))
            .then(self.seed.cmp(&other.seed))
            .then_with(|| self.mode.cmp(&other.mode))
    }
}

/// Orders rows by `(x0, n, a, b, seed)`.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(Row::key_cmp);
}

/// Seventeen significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn record(row: &Row) -> [String; 17] {
    [
        row.experiment_id.clone(),
        row.measure.clone(),
        row.perturbation.clone(),
        row.seed.map(|s| s.to_string()).unwrap_or_default(),
        fmt_float(row.x0),
        row.n.to_string(),
        fmt_float(row.a.re),
        fmt_float(row.a.im),
        fmt_float(row.b.re),
        fmt_float(row.b.im),
        row.mode.clone(),
        opt_float(row.value.map(|v| v.re)),
        opt_float(row.value.map(|v| v.im)),
        opt_float(row.target.map(|v| v.re)),
        opt_float(row.target.map(|v| v.im)),
        opt_float(row.abs_err),
        row.status.clone(),
    ]
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn row_json(row: &Row) -> Value {
    let mut m = Map::new();
    m.insert("experiment_id".into(), json!(row.experiment_id));
    m.insert("measure".into(), json!(row.measure));
    m.insert("perturbation".into(), json!(row.perturbation));
    m.insert("seed".into(), row.seed.map_or(Value::Null, |s| json!(s)));
    m.insert("x0".into(), num(row.x0));
    m.insert("n".into(), json!(row.n));
    m.insert("re_a".into(), num(row.a.re));
    m.insert("im_a".into(), num(row.a.im));
    m.insert("re_b".into(), num(row.b.re));
    m.insert("im_b".into(), num(row.b.im));
    m.insert("mode".into(), json!(row.mode));
    m.insert("value_re".into(), opt_num(row.value.map(|v| v.re)));
    m.insert("value_im".into(), opt_num(row.value.map(|v| v.im)));
    m.insert("target_re".into(), opt_num(row.target.map(|v| v.re)));
    m.insert("target_im".into(), opt_num(row.target.map(|v| v.im)));
    m.insert("abs_err".into(), opt_num(row.abs_err));
    m.insert("status".into(), json!(row.status));
    Value::Object(m)
}

pub fn document(rows: &[Row], summary: &Value) -> Value {
    json!({ "rows": rows.iter().map(row_json).collect::<Vec<_>>(), "summary": summary })
}

pub fn write_json<W: Write>(rows: &[Row], summary: &Value, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &document(rows, summary))?;
    out.write_all(b"\n")
}
