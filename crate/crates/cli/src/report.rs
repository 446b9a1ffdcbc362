//! Machine-readable reports.
//!
//! Reports are JSON objects with `schema = "lkdual-report/1"`. Floats are
//! written with 17 significant digits so that they parse back to the same
//! `f64`; non-finite values become `null`. Every report carries the SHA-256
//! of the spec text it was produced from.

use std::io;

use lkdual::dual_lmi::{Certificate, MarginResult, StabilityReport};
use lkdual::oracle::SpectrumResult;
use lkdual::polyalg::MatrixPoly;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA: &str = "lkdual-report/1";

/// Pretty-printing formatter that writes every float as `{:.16e}`.
struct PreciseFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serialises a report with 17-significant-digit floats.
pub fn render(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        PreciseFormatter {
            inner: PrettyFormatter::new(),
        },
    );
    value
        .serialize(&mut ser)
        .expect("serialising a JSON value cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

/// Lowercase hex SHA-256 of the input text.
pub fn input_hash(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

/// A finite float, or `null`.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| num(m[(r, c)])).collect()))
            .collect(),
    )
}

/// Numeric polynomial as `[{ "s", "theta", "coefficients" }]`.
pub fn poly(p: &MatrixPoly) -> Value {
    let (rows, cols) = p.shape();
    Value::Array(
        p.terms()
            .map(|(mono, coef)| {
                let m = DMatrix::from_fn(rows, cols, |r, c| coef[r * cols + c].constant_part());
                json!({ "s": mono.s, "theta": mono.theta, "coefficients": matrix(&m) })
            })
            .collect(),
    )
}

/// Fields shared by every report.
pub fn header(command: &str, source: &str, name: Option<&str>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(REPORT_SCHEMA));
    m.insert(
        "tool".into(),
        json!({ "name": "lkdual", "version": env!("CARGO_PKG_VERSION") }),
    );
    m.insert("command".into(), json!(command));
    m.insert("input_sha256".into(), json!(input_hash(source)));
    if let Some(n) = name {
        m.insert("system".into(), json!(n));
    }
    m
}

pub fn certificate(c: &Certificate) -> Value {
    json!({
        "P": matrix(&c.p),
        "Q": c.q.iter().map(poly).collect::<Vec<_>>(),
        "S": c.s.iter().map(poly).collect::<Vec<_>>(),
        "R": c.r.iter().map(poly).collect::<Vec<_>>(),
        "structural_residual": num(c.structural_residual),
    })
}

pub fn analysis(r: &StabilityReport) -> Value {
    json!({
        "status": r.status.as_str(),
        "degree": r.degree,
        "epsilon": num(r.epsilon),
        "path": format!("{:?}", r.path).to_lowercase(),
        "iterations": r.iterations,
        "solve_time_seconds": num(r.solve_time.as_secs_f64()),
        "num_vars": r.num_vars,
        "num_equalities": r.num_equalities,
        "block_sizes": r.block_sizes,
        "message": r.message,
        "residuals": {
            "max_equality": opt_num(r.max_equality_residual),
            "min_eigenvalue": opt_num(r.min_eigenvalue),
        },
        "dual_slack_bound": opt_num(r.dual_slack_bound),
    })
}

pub fn spectrum(s: &SpectrumResult, max_roots: usize) -> Value {
    json!({
        "abscissa": num(s.abscissa),
        "stable": s.is_stable(),
        "converged": s.converged,
        "collocation": s.collocation,
        "rightmost_roots": s.roots.iter().take(max_roots)
            .map(|r| json!({ "re": num(r.re), "im": num(r.im) }))
            .collect::<Vec<_>>(),
    })
}

pub fn margin(m: &MarginResult, parameter: &str) -> Value {
    json!({
        "parameter": parameter,
        "value": num(m.margin),
        "bracket": { "certified": num(m.bracket.0), "uncertified": num(m.bracket.1) },
        "elapsed_seconds": num(m.elapsed.as_secs_f64()),
        "probes": m.log.iter().map(|e| json!({
            "lambda": num(e.lambda),
            "status": e.status.as_str(),
            "message": e.message,
            "elapsed_seconds": num(e.elapsed.as_secs_f64()),
            "bracket": [num(e.bracket.0), num(e.bracket.1)],
        })).collect::<Vec<_>>(),
    })
}
