use std::collections::BTreeMap;

use super::{by_dimension, count_flag, values, Cell, ExperimentConfig, ExperimentKind, GroupSummary, MetricSummary, Row, Summary, Unit};
use crate::error::Result;
use crate::matrices::norm2;
use crate::rng::{derive_stream, RngStream};
use crate::sphere_profile::{
    allocation_constant, classify_profile, classify_sphere, min_half_subset_ssq, sample_allocation, PartitionParams, SphereClass, Verdict,
};
use crate::stats::EventFrequency;

pub(super) fn columns(config: &ExperimentConfig) -> Vec<String> {
    let names: &[&str] = match config.experiment {
        ExperimentKind::Allocation => &["urns", "min_ssq", "statistic"],
        _ => &["spread", "j_size", "occupied_bins", "min_ssq", "threshold", "regular", "halasz_regime"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

/// Uniform direction on the sphere from normalized Gaussian coordinates.
pub(crate) fn random_direction(n: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let norm = norm2(&x);
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
            return x;
        }
    }
}

fn urns(config: &ExperimentConfig, l: usize) -> usize {
    config.params.urns.unwrap_or(l)
}

pub(super) fn run_unit(config: &ExperimentConfig, unit: Unit) -> Result<Vec<Cell>> {
    let p = &config.params;
    let mut rng = derive_stream(config.master_seed, unit.index);
    match config.experiment {
        ExperimentKind::Allocation => {
            let k = urns(config, unit.n);
            let alloc = sample_allocation(unit.n, k, &mut rng)?;
            let stat = alloc.normalized_statistic();
            let min_ssq = min_half_subset_ssq(&alloc.occupancy, unit.n.div_ceil(2))?.min_ssq;
            Ok(vec![Cell::Count(k as u64), Cell::Count(min_ssq), Cell::Real(stat)])
        }
        _ => {
            let params = PartitionParams::new(p.r, p.big_r)?;
            let x = random_direction(unit.n, &mut rng);
            let (class, _) = classify_sphere(&x, &params)?;
            if class == SphereClass::Peaked {
                return Ok(vec![
                    Cell::Flag(false),
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Flag(false),
                    Cell::Missing,
                ]);
            }
            let c = classify_profile(&x, &params, p.delta, p.q)?;
            Ok(vec![
                Cell::Flag(true),
                Cell::Count(c.j_set.len() as u64),
                Cell::Count(c.profile.counts.len() as u64),
                Cell::Count(c.min_ssq),
                Cell::Real(c.threshold),
                Cell::Flag(c.verdict == Verdict::Regular),
                Cell::Flag(c.halasz_regime),
            ])
        }
    }
}

pub(super) fn summarize(config: &ExperimentConfig, columns: &[String], rows: &[Row]) -> Summary {
    let mut groups = Vec::new();
    let mut fitted_constants = BTreeMap::new();
    for (n, group) in by_dimension(config, rows) {
        let mut metrics = BTreeMap::new();
        let mut events = BTreeMap::new();
        let trials = group.len() as u64;
        match config.experiment {
            ExperimentKind::Allocation => {
                let stats = values(columns, &group, "statistic");
                let threshold = allocation_constant(config.params.eta);
                let failures = stats.iter().filter(|&&s| s > threshold).count() as u64;
                if let Some(m) = MetricSummary::of(&stats) {
                    fitted_constants.insert(format!("n={n}/allocation_constant"), m.max);
                    metrics.insert("statistic".to_owned(), m);
                }
                events.insert("allocation_failure".to_owned(), EventFrequency::new(failures, trials));
            }
            _ => {
                let spread = count_flag(columns, &group, "spread");
                let regular = count_flag(columns, &group, "regular");
                events.insert("spread".to_owned(), EventFrequency::new(spread, trials));
                if spread > 0 {
                    events.insert("regular_given_spread".to_owned(), EventFrequency::new(regular, spread));
                }
                for name in ["j_size", "occupied_bins", "min_ssq"] {
                    if let Some(m) = MetricSummary::of(&values(columns, &group, name)) {
                        metrics.insert(name.to_owned(), m);
                    }
                }
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
        fitted_constants,
        runtime_ms: 0.0,
    }
}
