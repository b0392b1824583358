//! Seeded experiment runner.
//!
//! An experiment is a list of independent units (one per dimension and trial,
//! or per calibration case). Unit `g` draws from the stream derived from
//! `(master_seed, g)`, so rows do not depend on the order or thread on which
//! units run.

mod config;
mod emit;
mod profiles;
mod small_ball;
mod spectral;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::stats::{EventFrequency, Quantiles};

pub use crate::rng::derive_stream;
pub use config::{ExperimentConfig, ExperimentKind, ExperimentParams};
pub use emit::{emit, from_json, to_csv, to_json, OutputFormat};
pub use small_ball::{regular_decay_curve, DecayCurve};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One CSV/JSON cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Missing,
    Flag(bool),
    Count(u64),
    Real(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Real(v) => Some(v),
            Cell::Count(c) => Some(c as f64),
            _ => None,
        }
    }

    pub fn as_flag(&self) -> Option<bool> {
        match *self {
            Cell::Flag(b) => Some(b),
            _ => None,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Missing => Ok(()),
            Cell::Flag(b) => write!(f, "{b}"),
            Cell::Count(c) => write!(f, "{c}"),
            Cell::Real(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: u64,
    pub n: usize,
    pub seed: u64,
    /// Aligned with [`ExperimentResult::columns`].
    pub values: Vec<Cell>,
    /// Zero unless the config asks for timings.
    pub elapsed_ms: f64,
}

impl Row {
    pub fn get(&self, columns: &[String], name: &str) -> Option<&Cell> {
        columns.iter().position(|c| c == name).map(|i| &self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub p99: f64,
    pub quantiles: Quantiles,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: crate::stats::mean(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            p99: crate::stats::quantile(values, 0.99),
            quantiles: Quantiles::of(values),
        })
    }
}

/// Summary of the rows sharing one dimension (or one bound, for calibration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: String,
    pub rows: usize,
    pub metrics: std::collections::BTreeMap<String, MetricSummary>,
    pub events: std::collections::BTreeMap<String, EventFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    pub fitted_constants: std::collections::BTreeMap<String, f64>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn group(&self, key: &str) -> Option<&GroupSummary> {
        self.summary.groups.iter().find(|g| g.key == key)
    }

    /// Values of a numeric column, in row order.
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.get(&self.columns, name).and_then(Cell::as_f64))
            .collect()
    }
}

/// A unit of work: trial `trial` at dimension `n`, drawing from stream `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Unit {
    pub index: u64,
    pub trial: u64,
    pub n: usize,
    /// Position in `n_list` or in the list of calibrated bounds.
    pub group: usize,
}

impl Unit {
    pub fn seed(&self, master_seed: u64) -> u64 {
        derive_seed(master_seed, self.index)
    }
}

fn units(config: &ExperimentConfig) -> Vec<Unit> {
    let trials = config.trials as u64;
    let groups: Vec<usize> = match config.experiment {
        ExperimentKind::BoundCalibration => vec![0; config.params.bounds.len()],
        _ => config.n_list.clone(),
    };
    groups
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| {
            // calibration case i always draws from stream i of its corpus
            let base = if config.experiment == ExperimentKind::BoundCalibration { 0 } else { g as u64 * trials };
            (0..trials).map(move |trial| Unit {
                index: base + trial,
                trial,
                n,
                group: g,
            })
        })
        .collect()
}

fn columns(config: &ExperimentConfig) -> Vec<String> {
    match config.experiment {
        ExperimentKind::SigmaMinTail | ExperimentKind::OpNorm | ExperimentKind::Peaked => {
            spectral::columns(config)
        }
        ExperimentKind::RegularSmallBall | ExperimentKind::BoundCalibration => small_ball::columns(config),
        ExperimentKind::Allocation | ExperimentKind::ProfileCensus => profiles::columns(config),
    }
}

fn run_unit(config: &ExperimentConfig, unit: Unit) -> Result<(usize, Vec<Cell>)> {
    match config.experiment {
        ExperimentKind::SigmaMinTail | ExperimentKind::OpNorm | ExperimentKind::Peaked => {
            spectral::run_unit(config, unit).map(|v| (unit.n, v))
        }
        ExperimentKind::RegularSmallBall | ExperimentKind::BoundCalibration => small_ball::run_unit(config, unit),
        ExperimentKind::Allocation | ExperimentKind::ProfileCensus => {
            profiles::run_unit(config, unit).map(|v| (unit.n, v))
        }
    }
}

/// Recomputes the summary from the rows alone; `runtime_ms` is left at 0.
pub fn summarize(config: &ExperimentConfig, columns: &[String], rows: &[Row]) -> Summary {
    match config.experiment {
        ExperimentKind::SigmaMinTail | ExperimentKind::OpNorm | ExperimentKind::Peaked => {
            spectral::summarize(config, columns, rows)
        }
        ExperimentKind::RegularSmallBall | ExperimentKind::BoundCalibration => {
            small_ball::summarize(config, columns, rows)
        }
        ExperimentKind::Allocation | ExperimentKind::ProfileCensus => profiles::summarize(config, columns, rows),
    }
}

/// Groups rows by dimension, keeping the order of `n_list`.
pub(crate) fn by_dimension<'a>(config: &ExperimentConfig, rows: &'a [Row]) -> Vec<(usize, Vec<&'a Row>)> {
    config
        .n_list
        .iter()
        .map(|&n| (n, rows.iter().filter(|r| r.n == n).collect()))
        .collect()
}

pub(crate) fn values(columns: &[String], rows: &[&Row], name: &str) -> Vec<f64> {
    rows.iter()
        .filter_map(|r| r.get(columns, name).and_then(Cell::as_f64))
        .collect()
}

pub(crate) fn count_flag(columns: &[String], rows: &[&Row], name: &str) -> u64 {
    rows.iter()
        .filter(|r| r.get(columns, name).and_then(Cell::as_flag) == Some(true))
        .count() as u64
}

/// Runs an experiment. With `threads = 1` units run in order on the calling
/// thread; otherwise on a pool of the given width (all cores if unset).
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let units = units(config);
    let timed = config.record_timing;
    let work = |unit: Unit| -> Result<Row> {
        let t0 = Instant::now();
        let (n, values) = run_unit(config, unit).map_err(|e| Error::Trial {
            trial: unit.index,
            source: Box::new(e),
        })?;
        Ok(Row {
            trial: unit.trial,
            n,
            seed: unit.seed(config.master_seed),
            values,
            elapsed_ms: if timed { t0.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
        })
    };
    let rows: Vec<Row> = match config.threads {
        Some(1) => units.into_iter().map(work).collect::<Result<_>>()?,
        Some(width) => rayon::ThreadPoolBuilder::new()
            .num_threads(width)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(|| units.into_par_iter().map(work).collect::<Result<_>>())?,
        None => units.into_par_iter().map(work).collect::<Result<_>>()?,
    };
    let columns = columns(config);
    let mut summary = summarize(config, &columns, &rows);
    if timed {
        summary.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(ExperimentResult {
        version: ARTIFACT_VERSION.to_owned(),
        config: config.clone(),
        columns,
        rows,
        summary,
    })
}
