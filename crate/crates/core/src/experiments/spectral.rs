use std::collections::BTreeMap;

use super::{by_dimension, count_flag, values, Cell, ExperimentConfig, ExperimentKind, GroupSummary, MetricSummary, Row, Summary, Unit};
use crate::error::{Error, Result};
use crate::matrices::{sample_matrix, IterationOptions};
use crate::stats::EventFrequency;

pub(super) fn columns(config: &ExperimentConfig) -> Vec<String> {
    let names: &[&str] = match config.experiment {
        ExperimentKind::SigmaMinTail => &["sigma_min", "op_norm", "singular_flag"],
        ExperimentKind::OpNorm => &["op_norm", "op_norm_over_sqrt_n", "large_norm"],
        _ => &["image_norm", "image_norm_over_sqrt_n", "small_image"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

pub(super) fn run_unit(config: &ExperimentConfig, unit: Unit) -> Result<Vec<Cell>> {
    let p = &config.params;
    let n = unit.n;
    let root = (n as f64).sqrt();
    let sample = sample_matrix::<f64>(&config.dist, n, unit.seed(config.master_seed))?;
    let opts = IterationOptions::default();
    match config.experiment {
        ExperimentKind::SigmaMinTail => {
            let s = sample.spectral_summary(opts);
            if !s.converged {
                return Err(Error::NonConvergence {
                    op: "spectral_summary",
                    detail: format!("iterations {:?}, residuals {:?}", s.iterations, s.residuals),
                });
            }
            Ok(vec![Cell::Real(s.sigma_min), Cell::Real(s.op_norm), Cell::Flag(s.singular_flag)])
        }
        ExperimentKind::OpNorm => {
            let r = sample.operator_norm(opts);
            if !r.converged {
                return Err(Error::NonConvergence {
                    op: "operator_norm",
                    detail: format!("{} iterations, residual {:e}", r.iterations, r.residual),
                });
            }
            Ok(vec![
                Cell::Real(r.value),
                Cell::Real(r.value / root),
                Cell::Flag(r.value > p.op_norm_factor * root),
            ])
        }
        _ => {
            let mut x = vec![0.0; n];
            let w = 1.0 / (p.spikes as f64).sqrt();
            x[..p.spikes].iter_mut().for_each(|v| *v = w);
            let image = crate::matrices::norm2(&sample.matrix.mul_vec(&x));
            Ok(vec![
                Cell::Real(image),
                Cell::Real(image / root),
                Cell::Flag(image <= p.spike_threshold * root),
            ])
        }
    }
}

pub(super) fn summarize(config: &ExperimentConfig, columns: &[String], rows: &[Row]) -> Summary {
    let p = &config.params;
    let mut groups = Vec::new();
    for (n, group) in by_dimension(config, rows) {
        let nf = n as f64;
        let mut metrics = BTreeMap::new();
        let mut events = BTreeMap::new();
        let trials = group.len() as u64;
        let mut metric = |name: &str, v: Vec<f64>| {
            if let Some(m) = MetricSummary::of(&v) {
                metrics.insert(name.to_owned(), m);
            }
        };
        match config.experiment {
            ExperimentKind::SigmaMinTail => {
                let sigma = values(columns, &group, "sigma_min");
                let threshold = p.tail_constant * p.eps * nf.powf(-1.5);
                let tail = sigma.iter().filter(|&&s| s < threshold).count() as u64;
                metric("sigma_min_sqrt_n", sigma.iter().map(|s| s * nf.sqrt()).collect());
                metric("sigma_min_n_3_2", sigma.iter().map(|s| s * nf.powf(1.5)).collect());
                metric(
                    "op_norm_over_sqrt_n",
                    values(columns, &group, "op_norm").iter().map(|s| s / nf.sqrt()).collect(),
                );
                events.insert("sigma_min_tail".to_owned(), EventFrequency::new(tail, trials));
                events.insert(
                    "singular".to_owned(),
                    EventFrequency::new(count_flag(columns, &group, "singular_flag"), trials),
                );
            }
            ExperimentKind::OpNorm => {
                metric("op_norm_over_sqrt_n", values(columns, &group, "op_norm_over_sqrt_n"));
                events.insert(
                    "large_norm".to_owned(),
                    EventFrequency::new(count_flag(columns, &group, "large_norm"), trials),
                );
            }
            _ => {
                metric("image_norm_over_sqrt_n", values(columns, &group, "image_norm_over_sqrt_n"));
                events.insert(
                    "small_image".to_owned(),
                    EventFrequency::new(count_flag(columns, &group, "small_image"), trials),
                );
            }
        }
        groups.push(GroupSummary {
            key: format!("n={n}"),
            rows: group.len(),
            metrics,
            events,
        });
    }
    Summary {
        groups,
        fitted_constants: BTreeMap::new(),
        runtime_ms: 0.0,
    }
}
