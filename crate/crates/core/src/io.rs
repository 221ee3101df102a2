//! CSV and JSON output formats, plus readers for every CSV written here.
//!
//! Floats are written with 17 significant digits so that 64-bit values
//! survive a round trip unchanged.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::spectral::Spectrum;
use crate::stability::{SigmaOutcome, StabilityReport, Verdict, Window};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

/// 17 significant digits in scientific notation; `inf`, `-inf`, `NaN` otherwise.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<(), IoError> {
    w.flush()?;
    Ok(())
}

/// `k,eigenvalue`, ascending, `k` 1-based.
pub fn write_spectrum_csv<W: Write>(out: W, s: &Spectrum) -> Result<(), IoError> {
    let mut w = writer(out);
    w.write_record(["k", "eigenvalue"])?;
    for (i, &l) in s.eigenvalues.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(l)])?;
    }
    finish(w)
}

/// `N × N` matrix whose column `k` is eigenvector `k`; header `v1..vN`.
pub fn write_eigenvectors_csv<W: Write>(out: W, s: &Spectrum) -> Result<(), IoError> {
    let header = (1..=s.n()).map(|k| format!("v{k}"));
    write_matrix_csv(out, header, &s.eigenvectors)
}

fn write_matrix_csv<W: Write>(
    out: W,
    header: impl IntoIterator<Item = String>,
    m: &DMatrix<f64>,
) -> Result<(), IoError> {
    let mut w = writer(out);
    w.write_record(header)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    finish(w)
}

/// `t,v0_c0,v0_c1,...`; one row per recorded state.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<(), IoError> {
    let mut w = writer(out);
    let Some(first) = traj.states.first() else {
        w.write_record(["t"])?;
        return finish(w);
    };
    let (n, m) = first.x.shape();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for a in 0..m {
            header.push(format!("v{i}_c{a}"));
        }
    }
    w.write_record(&header)?;
    for s in &traj.states {
        let mut row = Vec::with_capacity(1 + n * m);
        row.push(fmt_f64(s.t));
        for i in 0..n {
            for a in 0..m {
                row.push(fmt_f64(s.x[(i, a)]));
            }
        }
        w.write_record(&row)?;
    }
    finish(w)
}

/// `alpha,rate`.
pub fn write_msf_csv<W: Write>(out: W, alphas: &[f64], rates: &[f64]) -> Result<(), IoError> {
    let mut w = writer(out);
    w.write_record(["alpha", "rate"])?;
    for (&a, &r) in alphas.iter().zip(rates) {
        w.write_record([fmt_f64(a), fmt_f64(r)])?;
    }
    finish(w)
}

/// `sigma,theory_stable,empirical_sync_fraction,mean_final_sync_error`.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SigmaOutcome]) -> Result<(), IoError> {
    let mut w = writer(out);
    w.write_record(["sigma", "theory_stable", "empirical_sync_fraction", "mean_final_sync_error"])?;
    for r in rows {
        w.write_record([
            fmt_f64(r.sigma),
            r.theory_stable.to_string(),
            fmt_f64(r.empirical_sync_fraction),
            fmt_f64(r.mean_final_sync_error),
        ])?;
    }
    finish(w)
}

/// Header and numeric body of a CSV; `true`/`false` cells read as 1 and 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let cols = self.header.len();
        DMatrix::from_fn(self.rows.len(), cols, |i, j| self.rows[i][j])
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<CsvTable, IoError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|cell| match cell {
                "true" => Ok(1.0),
                "false" => Ok(0.0),
                _ => cell.parse::<f64>().map_err(|e| IoError::Format {
                    row: idx + 1,
                    message: format!("{cell:?}: {e}"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Reads a trajectory CSV back into sample times and `N × m` states.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<DMatrix<f64>>), IoError> {
    let table = read_csv(input)?;
    let mut n = 0;
    let mut m = 0;
    for (j, h) in table.header.iter().enumerate().skip(1) {
        let parsed = h
            .strip_prefix('v')
            .and_then(|rest| rest.split_once("_c"))
            .and_then(|(i, a)| Some((i.parse::<usize>().ok()?, a.parse::<usize>().ok()?)));
        let Some((i, a)) = parsed else {
            return Err(IoError::Format {
                row: 0,
                message: format!("unexpected column {h:?}"),
            });
        };
        n = n.max(i + 1);
        m = m.max(a + 1);
        let _ = j;
    }
    if n * m + 1 != table.header.len() {
        return Err(IoError::Format {
            row: 0,
            message: "incomplete state columns".into(),
        });
    }
    let times = table.rows.iter().map(|r| r[0]).collect();
    let states = table
        .rows
        .iter()
        .map(|r| DMatrix::from_fn(n, m, |i, a| r[1 + i * m + a]))
        .collect();
    Ok((times, states))
}

fn number(x: f64) -> Value {
    // JSON has no infinities; they are written as strings
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn window_json(w: Option<&Window>) -> Value {
    match w {
        Some(w) => json!({ "lo": w.lo, "hi": w.hi }),
        None => Value::Null,
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "stable",
        Verdict::Neutral => "neutral",
        Verdict::Marginal => "marginal",
        Verdict::Unstable => "unstable",
    }
}

/// Report as `{sigma, lambda_max, modes, neutral, overall, window, synchronization_precluded}`.
///
/// `overall` is `"precluded"`, `"stable"`, `"marginal"` or `"unstable"`.
pub fn stability_report_json(r: &StabilityReport) -> Value {
    let modes: Vec<Value> = r
        .modes
        .iter()
        .map(|m| {
            json!({
                "k": m.k,
                "eigenvalue": m.eigenvalue,
                "rate": number(m.rate),
                "verdict": verdict_name(m.verdict),
            })
        })
        .collect();
    let overall = if r.synchronization_precluded {
        "precluded"
    } else if r.overall_stable {
        "stable"
    } else if r.modes.iter().any(|m| m.verdict == Verdict::Unstable) {
        "unstable"
    } else {
        "marginal"
    };
    json!({
        "sigma": r.sigma,
        "lambda_max": number(r.lambda_max),
        "modes": modes,
        "neutral": r.neutral,
        "overall": overall,
        "window": window_json(r.window.as_ref()),
        "synchronization_precluded": r.synchronization_precluded,
    })
}
