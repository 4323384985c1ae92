use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::record::ResultRecord;
use crate::scan::ScanRow;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => Err(format!("unknown format `{other}` (json, csv, both)")),
        }
    }
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// `prefix` with the given extension; a `.json` or `.csv` suffix on the
/// prefix is dropped first.
pub fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let base = match prefix.extension().and_then(|e| e.to_str()) {
        Some("json" | "csv") => prefix.with_extension(""),
        _ => prefix.to_path_buf(),
    };
    let mut name = base.into_os_string();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(format!("serialization failed: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    write(path, &(to_json(value)? + "\n"))
}

/// Eigenvalue table of one run, one row per state.
pub fn eigenvalue_csv(record: &ResultRecord) -> String {
    let mut out = String::from("state,eigenvalue,reference,abs_error,rel_error,residual\n");
    let v = record.verification.as_ref();
    for (k, l) in record.eigenvalues.iter().enumerate() {
        let reference = v.map(|v| v.reference[k]);
        let abs = v.map(|v| v.abs_errors[k]);
        let rel = v.map(|v| v.rel_errors[k]);
        let res = v.and_then(|v| v.residuals.as_ref()).map(|r| r[k]);
        let _ = writeln!(out, "{k},{},{},{},{},{}", sci(*l), opt(reference), opt(abs), opt(rel), opt(res));
    }
    out
}

pub fn write_eigenvalue_csv(path: &Path, record: &ResultRecord) -> Result<(), Error> {
    write(path, &eigenvalue_csv(record))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Long-format scan table: one row per (axis value, state), or a single
/// row carrying the error of a failed run.
pub fn scan_csv(axis: &str, rows: &[ScanRow]) -> String {
    let mut out =
        String::from("axis,value,status,state,eigenvalue,reference,abs_error,wall_time_seconds,max_rank,num_sweeps,converged,message\n");
    for row in rows {
        match &row.outcome {
            Ok(rec) => {
                let status = if !rec.verified() {
                    "verification-failed"
                } else if rec.converged {
                    "ok"
                } else {
                    "not-converged"
                };
                for (k, l) in rec.eigenvalues.iter().enumerate() {
                    let reference = row.reference.as_ref().map(|r| r[k]);
                    let abs = reference.map(|r| (l - r).abs());
                    let _ = writeln!(
                        out,
                        "{axis},{},{status},{k},{},{},{},{},{},{},{},",
                        row.value,
                        sci(*l),
                        opt(reference),
                        opt(abs),
                        sci(rec.wall_time_seconds),
                        rec.max_rank,
                        rec.num_sweeps,
                        rec.converged
                    );
                }
            }
            Err(msg) => {
                let _ = writeln!(out, "{axis},{},error,,,,,,,,,{}", row.value, csv_field(msg));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let s = sci(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
        assert!(digits >= 15);
    }

    #[test]
    fn extensions() {
        assert_eq!(with_extension(Path::new("out/run"), "json"), PathBuf::from("out/run.json"));
        assert_eq!(with_extension(Path::new("run.json"), "csv"), PathBuf::from("run.csv"));
        assert_eq!(with_extension(Path::new("run.v2"), "csv"), PathBuf::from("run.v2.csv"));
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
