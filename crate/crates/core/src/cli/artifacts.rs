//! CSV and JSON artifacts of a run.
//!
//! A solve writes three files next to each other:
//!
//! - `<prefix>.trajectory.csv`: `k,t,j,alpha_upper,alpha_lower,norm_v,x_1..x_n,F_1..F_m`
//! - `<prefix>.directions.csv`: `k,sigma_certified,inner_iterations,v_1..v_n,w_1..w_m`
//! - `<prefix>.report.json`: configuration, termination, final point and diagnostics
//!
//! Reals are written as `{:.16e}` (17 significant digits) so every `f64`
//! parses back to the same bits; [`load_run`] rebuilds the [`RunReport`]
//! exactly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ProblemSource;
use crate::diagnostics::DiagnosticsSummary;
use crate::solver::{IterationRecord, RunReport, SolverConfig, Termination};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn artifact_path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<(), ArtifactError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| ArtifactError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn write_csv(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<(), ArtifactError> {
    ensure_parent(path)?;
    let csv_err = |source| ArtifactError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_trajectory(path: &Path, report: &RunReport) -> Result<(), ArtifactError> {
    let (n, m) = dims(report);
    let mut header: Vec<String> = ["k", "t", "j", "alpha_upper", "alpha_lower", "norm_v"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|i| format!("F_{i}")));
    let rows = report.records.iter().map(|r| {
        let mut row = vec![
            r.k.to_string(),
            fmt_real(r.t),
            r.j.to_string(),
            fmt_real(r.alpha_upper),
            fmt_real(r.alpha_lower),
            fmt_real(r.norm_v()),
        ];
        row.extend(r.x.iter().map(|v| fmt_real(*v)));
        row.extend(r.fx.iter().map(|v| fmt_real(*v)));
        row
    });
    write_csv(path, header, rows)
}

pub fn write_directions(path: &Path, report: &RunReport) -> Result<(), ArtifactError> {
    let (n, m) = dims(report);
    let mut header: Vec<String> = ["k", "sigma_certified", "inner_iterations"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|i| format!("v_{i}")));
    header.extend((1..=m).map(|i| format!("w_{i}")));
    let rows = report.records.iter().map(|r| {
        let mut row = vec![
            r.k.to_string(),
            r.sigma_certified.to_string(),
            r.inner_iterations.to_string(),
        ];
        row.extend(r.v.iter().map(|v| fmt_real(*v)));
        row.extend(r.weights.iter().map(|v| fmt_real(*v)));
        row
    });
    write_csv(path, header, rows)
}

fn dims(report: &RunReport) -> (usize, usize) {
    report
        .records
        .first()
        .map(|r| (r.x.len(), r.fx.len()))
        .unwrap_or((report.final_x.len(), 0))
}

/// Everything the run was configured with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub problem: String,
    /// Source expressions of an inline problem.
    pub definitions: Option<Vec<String>>,
    pub x0: Vec<f64>,
    pub solver: SolverConfig,
    pub output: String,
    pub x_tilde: Option<Vec<f64>>,
}

impl ConfigEcho {
    pub fn new(
        source: &ProblemSource,
        x0: &[f64],
        solver: SolverConfig,
        output: &str,
        x_tilde: Option<&[f64]>,
    ) -> Self {
        ConfigEcho {
            problem: source.name().to_string(),
            definitions: match source {
                ProblemSource::Inline(p) => Some(p.sources.clone()),
                ProblemSource::Builtin(_) => None,
            },
            x0: x0.to_vec(),
            solver,
            output: output.to_string(),
            x_tilde: x_tilde.map(<[f64]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportFile<'a> {
    pub config: &'a ConfigEcho,
    pub termination: Termination,
    pub iterations: usize,
    pub total_inner_iterations: usize,
    pub final_x: &'a [f64],
    pub final_alpha: f64,
    pub diagnostics: &'a DiagnosticsSummary,
}

/// The fields of `report.json` needed to rebuild a [`RunReport`].
#[derive(Debug, Clone, Deserialize)]
struct ReportHeader {
    config: EchoHeader,
    termination: Termination,
    final_x: Vec<f64>,
    final_alpha: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct EchoHeader {
    solver: SolverConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the trajectory, directions and report files; returns their paths.
pub fn write_run(
    prefix: &str,
    echo: &ConfigEcho,
    report: &RunReport,
    diagnostics: &DiagnosticsSummary,
) -> Result<[PathBuf; 3], ArtifactError> {
    let trajectory = artifact_path(prefix, "trajectory.csv");
    let directions = artifact_path(prefix, "directions.csv");
    let json = artifact_path(prefix, "report.json");
    write_trajectory(&trajectory, report)?;
    write_directions(&directions, report)?;
    write_json(
        &json,
        &ReportFile {
            config: echo,
            termination: report.termination,
            iterations: report.iterations(),
            total_inner_iterations: report.total_inner_iterations(),
            final_x: &report.final_x,
            final_alpha: report.final_alpha,
            diagnostics,
        },
    )?;
    Ok([trajectory, directions, json])
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, ArtifactError> {
        let csv_err = |source| ArtifactError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let rows = r.records().collect::<Result<_, _>>().map_err(csv_err)?;
        Ok(Table {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    fn malformed(&self, message: impl Into<String>) -> ArtifactError {
        ArtifactError::Malformed {
            path: self.path.clone(),
            message: message.into(),
        }
    }

    fn count(&self, prefix: &str) -> usize {
        self.header.iter().filter(|h| h.starts_with(prefix)).count()
    }

    fn field<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T, ArtifactError> {
        let text = self.rows[row]
            .get(col)
            .ok_or_else(|| self.malformed(format!("row {row}: missing column {col}")))?;
        text.parse().map_err(|_| {
            self.malformed(format!(
                "row {row}, column `{}`: cannot parse `{text}`",
                self.header[col]
            ))
        })
    }

    fn reals(&self, row: usize, cols: std::ops::Range<usize>) -> Result<Vec<f64>, ArtifactError> {
        cols.map(|c| self.field(row, c)).collect()
    }
}

/// Rebuilds a run from its three artifacts.
pub fn load_run(prefix: &str) -> Result<RunReport, ArtifactError> {
    let json_path = artifact_path(prefix, "report.json");
    let text = fs::read_to_string(&json_path).map_err(|source| ArtifactError::Io {
        path: json_path.clone(),
        source,
    })?;
    let header: ReportHeader = serde_json::from_str(&text).map_err(|source| ArtifactError::Json {
        path: json_path.clone(),
        source,
    })?;

    let traj = Table::read(&artifact_path(prefix, "trajectory.csv"))?;
    let dirs = Table::read(&artifact_path(prefix, "directions.csv"))?;
    let (n, m) = (traj.count("x_"), traj.count("F_"));
    if dirs.count("v_") != n || dirs.count("w_") != m {
        return Err(dirs.malformed("column counts disagree with the trajectory"));
    }
    if traj.rows.len() != dirs.rows.len() {
        return Err(dirs.malformed("row count disagrees with the trajectory"));
    }
    let mut records = Vec::with_capacity(traj.rows.len());
    for i in 0..traj.rows.len() {
        let k: usize = traj.field(i, 0)?;
        if dirs.field::<usize>(i, 0)? != k {
            return Err(dirs.malformed(format!("row {i}: iteration index mismatch")));
        }
        records.push(IterationRecord {
            k,
            t: traj.field(i, 1)?,
            j: traj.field(i, 2)?,
            alpha_upper: traj.field(i, 3)?,
            alpha_lower: traj.field(i, 4)?,
            x: traj.reals(i, 6..6 + n)?,
            fx: traj.reals(i, 6 + n..6 + n + m)?,
            sigma_certified: dirs.field(i, 1)?,
            inner_iterations: dirs.field(i, 2)?,
            v: dirs.reals(i, 3..3 + n)?,
            weights: dirs.reals(i, 3 + n..3 + n + m)?,
        });
    }
    Ok(RunReport {
        config: header.config.solver,
        records,
        termination: header.termination,
        final_x: header.final_x,
        final_alpha: header.final_alpha,
    })
}

/// One row of a σ-sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub iterations: usize,
    pub total_inner_iterations: usize,
    pub final_alpha: f64,
    pub termination: Termination,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), ArtifactError> {
    let header = [
        "sigma",
        "iterations",
        "total_inner_iterations",
        "final_alpha",
        "termination",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    write_csv(
        path,
        header,
        rows.iter().map(|r| {
            vec![
                fmt_real(r.sigma),
                r.iterations.to_string(),
                r.total_inner_iterations.to_string(),
                fmt_real(r.final_alpha),
                r.termination.as_str().to_string(),
            ]
        }),
    )
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>, ArtifactError> {
    let t = Table::read(path)?;
    (0..t.rows.len())
        .map(|i| {
            let termination: String = t.field(i, 4)?;
            Ok(SweepRow {
                sigma: t.field(i, 0)?,
                iterations: t.field(i, 1)?,
                total_inner_iterations: t.field(i, 2)?,
                final_alpha: t.field(i, 3)?,
                termination: termination.parse().map_err(|e: String| t.malformed(e))?,
            })
        })
        .collect()
}
