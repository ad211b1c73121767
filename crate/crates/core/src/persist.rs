//! CSV tables and JSON run summaries.
//!
//! Floats are written with 17 significant digits so that reading a file
//! back reproduces every value exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{ExclusionStats, MomentSeries, ScanResult};
use crate::error::{Error, Result};
use crate::model::SystemParams;

pub const MOMENT_COLUMNS: &[&str] = &[
    "t",
    "mean_z",
    "se_z",
    "mean_cos_phi",
    "se_cos_phi",
    "mean_E",
    "se_E",
    "var_E",
    "n_valid",
    "mean_H0",
    "se_H0",
    "var_H0",
    "mean_sx",
    "mean_sy",
];

/// Round-trip exact rendering of a float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Creates `dir`, refusing a non-empty existing directory unless `force`.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(Error::OutputExists { path: dir.into() });
        }
        if !dir.is_dir() {
            return Err(Error::Format {
                path: dir.into(),
                message: "not a directory".into(),
            });
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.into(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes a header row and float rows.
pub fn write_table<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header.iter().map(|h| h.as_ref()))
        .map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_f64(*x)))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a float table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Format {
                    path: path.into(),
                    message: format!("row {}: {f:?} is not a number", i + 2),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn moment_rows(ms: &MomentSeries) -> Vec<Vec<f64>> {
    (0..ms.len())
        .map(|k| {
            vec![
                ms.t[k],
                ms.mean_z[k],
                ms.se_z[k],
                ms.mean_cos_phi[k],
                ms.se_cos_phi[k],
                ms.mean_e[k],
                ms.se_e[k],
                ms.var_e[k],
                ms.n_valid as f64,
                ms.mean_h0[k],
                ms.se_h0[k],
                ms.var_h0[k],
                ms.mean_sx[k],
                ms.mean_sy[k],
            ]
        })
        .collect()
}

pub fn write_moment_series(path: &Path, ms: &MomentSeries) -> Result<()> {
    write_table(path, MOMENT_COLUMNS, &moment_rows(ms))
}

/// Reloads a moment-series CSV. Only the columns present in the file are
/// filled; `t` and `mean_z` are required.
pub fn read_moment_series(path: &Path, params: SystemParams) -> Result<MomentSeries> {
    let (header, rows) = read_table(path)?;
    let col = |name: &str| header.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::Format {
            path: path.into(),
            message: format!("missing column {name}"),
        })
    };
    let (it, iz) = (need("t")?, need("mean_z")?);
    let take = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let mut ms = MomentSeries::from_population(params, take(it), take(iz));
    let fill = |name: &str, dst: &mut Vec<f64>| {
        if let Some(j) = col(name) {
            *dst = take(j);
        }
    };
    fill("se_z", &mut ms.se_z);
    fill("mean_cos_phi", &mut ms.mean_cos_phi);
    fill("se_cos_phi", &mut ms.se_cos_phi);
    fill("mean_E", &mut ms.mean_e);
    fill("se_E", &mut ms.se_e);
    fill("var_E", &mut ms.var_e);
    fill("mean_H0", &mut ms.mean_h0);
    fill("se_H0", &mut ms.se_h0);
    fill("var_H0", &mut ms.var_h0);
    fill("mean_sx", &mut ms.mean_sx);
    fill("mean_sy", &mut ms.mean_sy);
    if let (Some(j), Some(r)) = (col("n_valid"), rows.first()) {
        ms.n_valid = r[j] as usize;
    }
    Ok(ms)
}

pub fn write_scan(path: &Path, scan: &ScanResult) -> Result<()> {
    write_table(path, &scan.columns, &scan.rows)
}

/// Provenance record written next to every result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub wall_time_s: f64,
    pub started_unix_s: f64,
    pub exclusions: Option<ExclusionStats>,
    pub outputs: Vec<String>,
    pub failures: Vec<(usize, String)>,
    pub warnings: Vec<String>,
    /// Config echo.
    pub config: serde_json::Value,
    /// Command-specific results.
    pub results: serde_json::Value,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.into(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
