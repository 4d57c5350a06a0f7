//! CSV problem files and result rows.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use fflt::Complex64;

/// Laplace problem: spatial nodes, frequencies and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceInput {
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub fhat: Vec<Complex64>,
}

/// Unit-disk problem: nodes, exponents and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskInput {
    pub z: Vec<Complex64>,
    pub exponents: Vec<f64>,
    pub fhat: Vec<Complex64>,
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        bail!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header.join(","),
            found.join(",")
        );
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed row {}", path.display(), line + 2))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().with_context(|| {
                    format!("{}: row {}: {field:?} is not a number", path.display(), line + 2)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

pub const LAPLACE_HEADER: [&str; 4] = ["y", "xi", "fhat_re", "fhat_im"];
pub const DISK_HEADER: [&str; 5] = ["z_re", "z_im", "exponent", "fhat_re", "fhat_im"];

pub fn read_laplace(path: &Path) -> Result<LaplaceInput> {
    let rows = read_rows(path, &LAPLACE_HEADER)?;
    Ok(LaplaceInput {
        y: rows.iter().map(|r| r[0]).collect(),
        xi: rows.iter().map(|r| r[1]).collect(),
        fhat: rows.iter().map(|r| Complex64::new(r[2], r[3])).collect(),
    })
}

pub fn read_disk(path: &Path) -> Result<DiskInput> {
    let rows = read_rows(path, &DISK_HEADER)?;
    Ok(DiskInput {
        z: rows.iter().map(|r| Complex64::new(r[0], r[1])).collect(),
        exponents: rows.iter().map(|r| r[2]).collect(),
        fhat: rows.iter().map(|r| Complex64::new(r[3], r[4])).collect(),
    })
}

pub fn write_laplace(path: &Path, input: &LaplaceInput) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LAPLACE_HEADER)?;
    for ((y, xi), f) in input.y.iter().zip(&input.xi).zip(&input.fhat) {
        w.write_record([fmt_float(*y), fmt_float(*xi), fmt_float(f.re), fmt_float(f.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_disk(path: &Path, input: &DiskInput) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DISK_HEADER)?;
    for ((z, e), f) in input.z.iter().zip(&input.exponents).zip(&input.fhat) {
        w.write_record([
            fmt_float(z.re),
            fmt_float(z.im),
            fmt_float(*e),
            fmt_float(f.re),
            fmt_float(f.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header and rows to `path`, or to stdout when `path` is absent.
pub fn write_table(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
