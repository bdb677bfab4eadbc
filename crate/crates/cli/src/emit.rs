//! Byte-stable CSV and JSON emission with write-then-rename.

use std::io::Write;
use std::path::{Path, PathBuf};

use qfluct::scenarios::SeriesRow;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SERIES_COLUMNS: [&str; 14] = [
    "t",
    "mu",
    "sigma",
    "mu_dot",
    "sigma_dot",
    "sigma_v",
    "v2_mean",
    "lhs_sq_sum",
    "rhs_v2",
    "residual_r2",
    "cs_residual",
    "tight",
    "degenerate",
    "norm_defect",
];

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_bool(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn series_record(row: &SeriesRow) -> [String; 14] {
    let r = &row.report;
    [
        fmt_f64(r.t),
        fmt_f64(r.mu),
        fmt_f64(r.sigma),
        fmt_f64(r.mu_dot),
        fmt_opt(r.sigma_dot),
        fmt_f64(r.sigma_v),
        fmt_f64(r.v2_mean),
        fmt_opt(r.lhs_sq_sum),
        fmt_f64(r.v2_mean),
        fmt_opt(r.residual_r2),
        fmt_f64(r.cs_residual),
        fmt_bool(r.tight),
        fmt_bool(r.degenerate),
        fmt_f64(row.norm_defect),
    ]
}

fn csv_bytes<I, R>(header: &[&str], records: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::io("<csv buffer>", std::io::Error::other(e));
    w.write_record(header).map_err(fail)?;
    for rec in records {
        w.write_record(rec).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv buffer>", std::io::Error::other(e.to_string())))
}

pub fn series_csv(rows: &[SeriesRow]) -> CliResult<Vec<u8>> {
    csv_bytes(&SERIES_COLUMNS, rows.iter().map(series_record))
}

pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    csv_bytes(header, rows.iter())
}

pub fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::io("<json buffer>", std::io::Error::other(e)))?;
    out.push(b'\n');
    Ok(out)
}

/// Write `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    Ok(target)
}

/// Files staged in memory and written together once every one has been produced.
#[derive(Default)]
pub struct Staged {
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn commit(self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        self.files.iter().map(|(n, b)| write_atomic(dir, n, b)).collect()
    }
}
