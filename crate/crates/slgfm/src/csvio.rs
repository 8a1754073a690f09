//! CSV emitters and parsers. Floats are written in shortest round-trip form,
//! so `parse(emit(x)) == x` holds bit for bit.

use std::borrow::Cow;
use std::io::{Read, Write};

use slgfm_core::sim::{Signal, SimTrace};
use slgfm_core::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

fn row_err(row: usize, msg: impl Into<String>) -> CsvError {
    CsvError::Row { row, msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleKind {
    Ol,
    Cl,
}

impl PoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoleKind::Ol => "OL",
            PoleKind::Cl => "CL",
        }
    }
}

impl std::str::FromStr for PoleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "OL" => Ok(PoleKind::Ol),
            "CL" => Ok(PoleKind::Cl),
            _ => Err(format!("unknown pole kind `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleRow {
    pub label: String,
    pub re: f64,
    pub im: f64,
    pub kind: PoleKind,
    pub rhp: bool,
}

impl PoleRow {
    pub fn pole(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

pub const POLE_HEADER: [&str; 5] = ["label", "re", "im", "kind", "rhp"];
pub const NYQUIST_HEADER: [&str; 3] = ["omega", "re", "im"];

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Readers skip `#` report lines so stdout output parses directly.
fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

fn parse_f64(s: &str, row: usize) -> Result<f64, CsvError> {
    s.parse::<f64>().map_err(|_| row_err(row, format!("not a number: `{s}`")))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), CsvError> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(CsvError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

/// Labels are quoted when they would otherwise be misread, including a
/// leading `#` that readers take for a report line.
fn quote_label(label: &str) -> Cow<'_, str> {
    if label.starts_with('#') || label.contains([',', '"', '\n', '\r']) {
        Cow::Owned(format!("\"{}\"", label.replace('"', "\"\"")))
    } else {
        Cow::Borrowed(label)
    }
}

pub fn write_poles<W: Write>(mut w: W, rows: &[PoleRow]) -> Result<(), CsvError> {
    writeln!(w, "{}", POLE_HEADER.join(","))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            quote_label(&r.label),
            fmt_f64(r.re),
            fmt_f64(r.im),
            r.kind.as_str(),
            r.rhp
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_poles<R: Read>(r: R) -> Result<Vec<PoleRow>, CsvError> {
    let mut rd = reader(r);
    check_header(rd.headers()?, &POLE_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 5 {
            return Err(row_err(row, "expected 5 fields"));
        }
        out.push(PoleRow {
            label: rec[0].to_string(),
            re: parse_f64(&rec[1], row)?,
            im: parse_f64(&rec[2], row)?,
            kind: rec[3].parse().map_err(|e: String| row_err(row, e))?,
            rhp: rec[4].parse().map_err(|_| row_err(row, "rhp must be true or false"))?,
        });
    }
    Ok(out)
}

/// `(omega, G(j omega))` samples; `freq_scale` divides the frequency column
/// (`1/2pi` for Hz).
pub fn write_nyquist<W: Write>(w: W, samples: &[(f64, Complex64)], freq_scale: f64) -> Result<(), CsvError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(NYQUIST_HEADER)?;
    for (omega, g) in samples {
        wr.write_record([fmt_f64(omega * freq_scale), fmt_f64(g.re), fmt_f64(g.im)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_nyquist<R: Read>(r: R) -> Result<Vec<(f64, Complex64)>, CsvError> {
    let mut rd = reader(r);
    check_header(rd.headers()?, &NYQUIST_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 3 {
            return Err(row_err(row, "expected 3 fields"));
        }
        out.push((
            parse_f64(&rec[0], row)?,
            Complex64::new(parse_f64(&rec[1], row)?, parse_f64(&rec[2], row)?),
        ));
    }
    Ok(out)
}

/// Header `t,<signal>...`; time in s, signals in p.u. (`delta` in rad).
pub fn write_trace<W: Write>(w: W, tr: &SimTrace) -> Result<(), CsvError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(tr.signals.iter().map(|(s, _)| s.name().to_string()));
    wr.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for (k, t) in tr.t.iter().enumerate() {
        rec.clear();
        rec.push(fmt_f64(*t));
        rec.extend(tr.signals.iter().map(|(_, v)| fmt_f64(v[k])));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a trace; `diverged_at` is not part of the file and comes back `None`.
pub fn read_trace<R: Read>(r: R) -> Result<SimTrace, CsvError> {
    let mut rd = reader(r);
    let header = rd.headers()?.clone();
    if header.get(0) != Some("t") {
        return Err(CsvError::Header {
            expected: "t,<signal>...".to_string(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let signals: Vec<Signal> = header
        .iter()
        .skip(1)
        .map(|h| h.parse::<Signal>().map_err(|e| row_err(1, e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut t = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); signals.len()];
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != signals.len() + 1 {
            return Err(row_err(row, "field count differs from header"));
        }
        t.push(parse_f64(&rec[0], row)?);
        for (c, f) in cols.iter_mut().zip(rec.iter().skip(1)) {
            c.push(parse_f64(f, row)?);
        }
    }
    Ok(SimTrace {
        t,
        signals: signals.into_iter().zip(cols).collect(),
        diverged_at: None,
    })
}
