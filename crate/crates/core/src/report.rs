//! JSON and CSV output for every report type.

use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;
use crate::grid_oracle::OracleComparison;
use crate::identities::IdentityReport;
use crate::inequalities::SlackReport;
use crate::sharpness::{LimitScan, N2FailureDemo};
use crate::spectral::ConvergenceTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}` (json or csv)"))),
        }
    }
}

/// Fixed CSV layout of a report type.
pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn records(&self) -> Vec<Vec<String>>;
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

impl CsvRecord for IdentityReport {
    const HEADER: &'static [&'static str] = &["id", "n", "modes", "lhs", "rhs", "rel_residual", "pass"];
    fn records(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.id.clone(),
            self.n.to_string(),
            self.modes.to_string(),
            f(self.lhs),
            f(self.rhs),
            f(self.rel_residual),
            self.pass.to_string(),
        ]]
    }
}

impl CsvRecord for SlackReport {
    const HEADER: &'static [&'static str] = &["id", "n", "modes", "constant", "lhs", "rhs", "slack", "pass"];
    fn records(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.id.clone(),
            self.n.to_string(),
            self.modes.to_string(),
            f(self.constant),
            f(self.lhs),
            f(self.rhs),
            f(self.slack),
            self.pass.to_string(),
        ]]
    }
}

impl CsvRecord for LimitScan {
    const HEADER: &'static [&'static str] = &["scan", "parameter", "value", "target", "gap"];
    fn records(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .parameters
            .iter()
            .zip(&self.values)
            .map(|(p, v)| vec![self.name.clone(), f(*p), f(*v), f(self.target), f(relative(*v, self.target))])
            .collect();
        rows.push(vec![self.name.clone(), "limit".into(), f(self.limit), f(self.target), f(self.gap)]);
        rows
    }
}

fn relative(v: f64, t: f64) -> f64 {
    if t == 0.0 {
        v
    } else {
        (v - t) / t.abs()
    }
}

impl CsvRecord for ConvergenceTable {
    const HEADER: &'static [&'static str] = &["target_id", "basis_size", "a", "R", "estimate", "target", "gap"];
    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    self.target_id.clone(),
                    r.basis_size.to_string(),
                    f(r.a),
                    f(r.r_max),
                    f(r.estimate),
                    f(r.target),
                    f(r.gap),
                ]
            })
            .collect()
    }
}

impl CsvRecord for OracleComparison {
    const HEADER: &'static [&'static str] = &["n", "modes", "quantity", "mode_space", "oracle", "rel_diff", "pass"];
    fn records(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.n.to_string(),
            self.modes.to_string(),
            self.quantity.clone(),
            f(self.mode_space),
            f(self.oracle),
            f(self.rel_diff),
            self.pass.to_string(),
        ]]
    }
}

impl CsvRecord for N2FailureDemo {
    const HEADER: &'static [&'static str] = &["a", "log_inv_a", "weighted", "radial", "laplacian", "increment"];
    fn records(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = (0..self.a.len())
            .map(|i| {
                let inc = if i == 0 { String::new() } else { f(self.increments[i - 1]) };
                vec![
                    f(self.a[i]),
                    f(self.log_inv_a[i]),
                    f(self.weighted[i]),
                    f(self.radial[i]),
                    f(self.laplacian[i]),
                    inc,
                ]
            })
            .collect();
        rows.push(vec![
            "deep".into(),
            f(self.deep_log_inv_a),
            f(self.deep_weighted),
            f(self.deep_radial),
            f(self.deep_laplacian),
            String::new(),
        ]);
        rows
    }
}

/// Write `items` as a pretty JSON array or as CSV with the type's header.
pub fn write_report<T, W>(out: W, items: &[T], format: Format) -> io::Result<()>
where
    T: Serialize + CsvRecord,
    W: Write,
{
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, items)?;
            writeln!(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(T::HEADER)?;
            for item in items {
                for rec in item.records() {
                    w.write_record(&rec)?;
                }
            }
            w.flush()
        }
    }
}
