//! Versioned JSON documents and CSV trajectory files.
//!
//! Floats are always written as `{:.16e}` (17 significant digits), so a value
//! read back parses to the same `f64` and identical inputs give identical bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::model::{DcheParams, HeunPolynomial, Sample, Trajectory};
use crate::spectral::SpectralSet;

pub const SCHEMA: &str = "heun-rsj/1";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with fixed-width float formatting. Non-finite values become `null`.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// A payload tagged with the schema key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Document<T> {
    pub fn new(body: T) -> Self {
        Self { schema: SCHEMA.to_string(), body }
    }
}

/// Serializes `value` under the schema key, pretty-printed, with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::new()));
    Document::new(value).serialize(&mut ser).map_err(|e| Error::Serialization(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let doc: Document<T> = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    if doc.schema != SCHEMA {
        return Err(Error::Serialization(format!("unsupported schema {:?}", doc.schema)));
    }
    Ok(doc.body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialRecord {
    pub n: usize,
    pub mu: f64,
    pub lambda: f64,
    pub coeffs: Vec<f64>,
}

impl From<&HeunPolynomial> for PolynomialRecord {
    fn from(p: &HeunPolynomial) -> Self {
        Self { n: p.n(), mu: p.mu(), lambda: p.lambda(), coeffs: p.coeffs().to_vec() }
    }
}

impl PolynomialRecord {
    pub fn to_polynomial(&self) -> Result<HeunPolynomial> {
        HeunPolynomial::new(DcheParams::new(self.n, self.mu, self.lambda)?, self.coeffs.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub n: usize,
    pub mu: f64,
    pub lambdas: Vec<f64>,
}

impl From<&SpectralSet> for SpectrumRecord {
    fn from(s: &SpectralSet) -> Self {
        Self { n: s.n, mu: s.mu, lambdas: s.lambdas.clone() }
    }
}

/// Structured failure report used in place of a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self { error: e.name().to_string(), message: e.to_string() }
    }
}

#[derive(Serialize)]
struct TrajectoryRecord<'a> {
    columns: Vec<&'a str>,
    rows: Vec<Vec<f64>>,
}

pub fn trajectory_to_json<S: Sample>(traj: &Trajectory<S>) -> Result<String> {
    let mut columns = vec!["t"];
    columns.extend_from_slice(S::COLUMNS);
    let rows = traj
        .iter()
        .map(|(t, s)| std::iter::once(t).chain(s.components()).collect())
        .collect();
    to_json(&TrajectoryRecord { columns, rows })
}

/// CSV with header `t,<columns>`.
pub fn write_trajectory_csv<S: Sample, W: Write>(traj: &Trajectory<S>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Serialization(e.to_string());
    let mut header = vec!["t"];
    header.extend_from_slice(S::COLUMNS);
    w.write_record(&header).map_err(err)?;
    for (t, s) in traj.iter() {
        let row = std::iter::once(t).chain(s.components()).map(fmt_f64);
        w.write_record(row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

/// Writes string rows under a header, quoting as needed.
pub fn write_csv<W: Write>(header: &[&str], rows: &[Vec<String>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}
