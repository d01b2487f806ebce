//! CSV input and output.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sim::MetricsRow;
use crate::ustat::LabeledSample;

pub const RESULTS_HEADER: [&str; 8] = ["eta", "tau_sq", "estimator", "bias", "se", "rmse", "pct_change", "sigma_rmse_hat"];

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| Error::data_at(line, format!("column {column}: `{cell}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::data_at(line, format!("column {column}: non-finite value `{cell}`")));
    }
    Ok(v)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::Data { row: line, message: e.to_string() }
}

/// Reads a `y,x1,...,xp` file. Error rows are file line numbers.
pub fn ingest_csv(path: &Path) -> Result<LabeledSample> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_sample(file)
}

pub fn read_sample<R: std::io::Read>(reader: R) -> Result<LabeledSample> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() < 2 {
        return Err(Error::data_at(1, "header must be `y,x1,...,xp` with at least one covariate"));
    }
    if headers.get(0).map(str::trim) != Some("y") {
        return Err(Error::data_at(1, "first column must be `y`"));
    }
    let p = headers.len() - 1;
    let mut ys = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        ys.push(parse_cell(&record[0], line, 1)?);
        for c in 1..=p {
            xs.push(parse_cell(&record[c], line, c + 1)?);
        }
    }
    let n = ys.len();
    if n < 2 {
        return Err(Error::Data { row: None, message: format!("need at least 2 observations, found {n}") });
    }
    LabeledSample::new(DMatrix::from_row_slice(n, p, &xs), DVector::from_vec(ys))
}

/// Writes a sample as `y,x1,...,xp` with round-trip float formatting.
pub fn write_sample_csv(sample: &LabeledSample, path: &Path) -> Result<()> {
    let mut out = String::from("y");
    for j in 1..=sample.p() {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for i in 0..sample.n() {
        out.push_str(&format!("{}", sample.y()[i]));
        for v in sample.x().row(i).iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn numeric_lines(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(k, l)| l.split(',').enumerate().map(|(c, cell)| parse_cell(cell, k + 1, c + 1)).collect())
        .collect()
}

/// A mean vector: numbers separated by commas and/or newlines, no header.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let values: Vec<f64> = numeric_lines(path)?.into_iter().flatten().collect();
    Ok(DVector::from_vec(values))
}

/// A square matrix, one comma-separated row per line, no header.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = numeric_lines(path)?;
    let p = rows.len();
    if let Some((k, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
        return Err(Error::data_at(k + 1, format!("expected {p} columns, found {}", r.len())));
    }
    Ok(DMatrix::from_row_iterator(p, p, rows.into_iter().flatten()))
}

/// Six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    // the exponent after rounding to six digits decides the layout
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

pub fn render_results(rows: &[MetricsRow]) -> String {
    let mut out = RESULTS_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let cells = [
            format_sig6(r.eta),
            format_sig6(r.tau_sq),
            r.estimator.clone(),
            format_sig6(r.bias),
            format_sig6(r.se),
            format_sig6(r.rmse),
            format_sig6(r.pct_change),
            format_sig6(r.sigma_rmse_hat),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes the Table-1 style CSV.
pub fn emit_results(rows: &[MetricsRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::data("no result rows to write"));
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(render_results(rows).as_bytes()).map_err(|e| Error::io(path, e))
}
