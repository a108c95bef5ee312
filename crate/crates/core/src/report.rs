//! Byte-stable JSON and CSV output.
//!
//! Floats are written in scientific notation with 17 significant digits and
//! every document ends with a newline.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::simulate::EstimatorReport;

pub const FORMAT_VERSION: &str = "polya-urn/1";

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Keep the sign of negative zero out of the files.
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

struct StableFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Pretty JSON with stable float formatting and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        StableFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        },
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Envelope for every emitted JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact<'a, T: Serialize> {
    pub format_version: &'static str,
    pub kind: &'a str,
    pub config: &'a serde_json::Value,
    pub report: &'a T,
}

impl<'a, T: Serialize> Artifact<'a, T> {
    pub fn new(kind: &'a str, config: &'a serde_json::Value, report: &'a T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind,
            config,
            report,
        }
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        to_json(self)
    }
}

pub const STATS_HEADER: &str = "n,stat,coord,value,stderr";

/// Long-format statistics table. Coordinates are 1-based; matrix entries use
/// `i:j` and scalars leave the column empty.
pub fn stats_csv(report: &EstimatorReport) -> String {
    let mut out = String::new();
    out.push_str(STATS_HEADER);
    out.push('\n');
    let mut row = |n: u64, stat: &str, coord: &str, value: f64, se: f64| {
        out.push_str(&format!("{n},{stat},{coord},{},{}\n", fmt_f64(value), fmt_f64(se)));
    };
    for cp in &report.checkpoints {
        let n = cp.n;
        row(n, "survivors", "", cp.survivors as f64, 0.0);
        row(n, "extinction_rate", "", cp.extinction_rate.value, cp.extinction_rate.stderr);
        for (i, e) in cp.mean.iter().enumerate() {
            row(n, "mean", &(i + 1).to_string(), e.value, e.stderr);
        }
        for (i, r) in cp.cov_over_n.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                row(n, "cov_over_n", &format!("{}:{}", i + 1, j + 1), *v, cp.cov_over_n_stderr[i][j]);
            }
        }
        for l in &cp.lp {
            row(n, &format!("lp{}", l.p), "", l.conditional.value, l.conditional.stderr);
            row(n, &format!("lp{}_indicator", l.p), "", l.indicator.value, l.indicator.stderr);
        }
        for (i, e) in cp.skewness.iter().enumerate() {
            if let Some(e) = e {
                row(n, "skewness", &(i + 1).to_string(), e.value, e.stderr);
            }
        }
        for (i, e) in cp.excess_kurtosis.iter().enumerate() {
            if let Some(e) = e {
                row(n, "excess_kurtosis", &(i + 1).to_string(), e.value, e.stderr);
            }
        }
        row(n, "centering_bias", "", cp.centering_bias, 0.0);
    }
    out
}
