use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{by_dimension, count_flag, values, Cell, ExperimentConfig, ExperimentKind, ExperimentParams, GroupSummary, MetricSummary, Row, Summary, Unit};
use crate::calibration;
use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};
use crate::experiments::profiles::random_direction;
use crate::rng::{derive_seed, RngStream};
use crate::small_ball::monte_carlo_window_counts;
use crate::sphere_profile::{classify_profile, classify_sphere, PartitionParams, SphereClass, Verdict};
use crate::stats::{clopper_pearson, linear_fit, EventFrequency, LinearFit};

/// Monte Carlo concentration of `Σ β_j x_j` around 0 on a grid of windows,
/// for a direction `x` with a regular profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    /// Directions drawn until a regular one was found.
    pub attempts: usize,
    pub x: Vec<f64>,
    pub min_ssq: u64,
    pub threshold: f64,
    pub ts: Vec<f64>,
    pub estimate: Vec<f64>,
    /// Upper ends of the 95% Clopper–Pearson intervals.
    pub upper: Vec<f64>,
    pub fit: LinearFit,
}

impl DecayCurve {
    /// Nondecreasing in `t` at every grid step.
    pub fn monotone(&self) -> bool {
        self.estimate.windows(2).all(|w| w[0] <= w[1])
    }

    /// `max_t Q(t) / (Q t)` for the point estimates or the interval tops.
    pub fn max_ratio(&self, q: f64, upper: bool) -> f64 {
        let values = if upper { &self.upper } else { &self.estimate };
        values
            .iter()
            .zip(&self.ts)
            .map(|(v, t)| v / (q * t))
            .fold(0.0, f64::max)
    }
}

/// Draws directions uniformly from the sphere until one is spread with a
/// (Δ, Q)-regular profile, then estimates its concentration at
/// `t = c·Δ` for each `c` in `t_multiples`.
pub fn regular_decay_curve(n: usize, dist: &EntryDistribution, p: &ExperimentParams, seed: u64) -> Result<DecayCurve> {
    let params = PartitionParams::new(p.r, p.big_r)?;
    let mut rng = RngStream::new(seed);
    let mut attempts = 0;
    let (x, class) = loop {
        if attempts == p.max_attempts {
            return Err(Error::regime(
                "regular_decay_curve",
                format!("no regular direction among {attempts} draws at n = {n}"),
            ));
        }
        attempts += 1;
        let x = random_direction(n, &mut rng);
        if classify_sphere(&x, &params)?.0 == SphereClass::Peaked {
            continue;
        }
        let c = classify_profile(&x, &params, p.delta, p.q)?;
        if c.verdict == Verdict::Regular {
            break (x, c);
        }
    };
    let ts: Vec<f64> = p.t_multiples.iter().map(|c| c * p.delta).collect();
    let hits = monte_carlo_window_counts(&x, dist, 0.0, &ts, p.mc_trials, derive_seed(seed, 1));
    let estimate: Vec<f64> = hits.iter().map(|&h| h as f64 / p.mc_trials as f64).collect();
    let upper = hits.iter().map(|&h| clopper_pearson(h, p.mc_trials, 0.95).1).collect();
    let fit = linear_fit(&ts, &estimate);
    Ok(DecayCurve {
        attempts,
        min_ssq: class.min_ssq,
        threshold: class.threshold,
        x,
        ts,
        estimate,
        upper,
        fit,
    })
}

fn window_column(c: f64) -> String {
    format!("q_at_{c}delta")
}

pub(super) fn columns(config: &ExperimentConfig) -> Vec<String> {
    match config.experiment {
        ExperimentKind::RegularSmallBall => {
            let mut names: Vec<String> = [
                "attempts",
                "min_ssq",
                "threshold",
                "slope",
                "intercept",
                "r_squared",
                "monotone",
                "max_ratio",
                "max_upper_ratio",
                "dominated",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            names.extend(config.params.t_multiples.iter().map(|&c| window_column(c)));
            names
        }
        _ => ["bound", "t", "exact", "bound_value", "ratio", "frozen_constant", "dominated"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    }
}

pub(super) fn run_unit(config: &ExperimentConfig, unit: Unit) -> Result<(usize, Vec<Cell>)> {
    let p = &config.params;
    match config.experiment {
        ExperimentKind::RegularSmallBall => {
            let curve = regular_decay_curve(unit.n, &config.dist, p, unit.seed(config.master_seed))?;
            let dominated = curve.max_ratio(p.q, false) <= calibration::LINEAR_DECAY_CONSTANT;
            let mut cells = vec![
                Cell::Count(curve.attempts as u64),
                Cell::Count(curve.min_ssq),
                Cell::Real(curve.threshold),
                Cell::Real(curve.fit.slope),
                Cell::Real(curve.fit.intercept),
                Cell::Real(curve.fit.r_squared),
                Cell::Flag(curve.monotone()),
                Cell::Real(curve.max_ratio(p.q, false)),
                Cell::Real(curve.max_ratio(p.q, true)),
                Cell::Flag(dominated),
            ];
            cells.extend(curve.estimate.iter().map(|&v| Cell::Real(v)));
            Ok((unit.n, cells))
        }
        _ => {
            let kind = p.bounds[unit.group];
            let case = calibration::case(kind, config.master_seed, unit.trial as usize)?;
            let constant = kind.frozen_constant();
            Ok((
                case.x.len(),
                vec![
                    Cell::Text(kind.name().to_owned()),
                    Cell::Real(case.t),
                    Cell::Real(case.exact),
                    Cell::Real(case.bound),
                    Cell::Real(case.ratio()),
                    Cell::Real(constant),
                    Cell::Flag(case.exact <= constant * case.bound),
                ],
            ))
        }
    }
}

pub(super) fn summarize(config: &ExperimentConfig, columns: &[String], rows: &[Row]) -> Summary {
    let mut groups = Vec::new();
    let mut fitted_constants = BTreeMap::new();
    let mut push = |key: String, group: Vec<&Row>, metric_names: &[&str], event_names: &[&str]| {
        let trials = group.len() as u64;
        let metrics = metric_names
            .iter()
            .filter_map(|&m| MetricSummary::of(&values(columns, &group, m)).map(|s| (m.to_owned(), s)))
            .collect();
        let events = event_names
            .iter()
            .map(|&e| (e.to_owned(), EventFrequency::new(count_flag(columns, &group, e), trials)))
            .collect();
        groups.push(GroupSummary {
            key,
            rows: group.len(),
            metrics,
            events,
        });
    };
    match config.experiment {
        ExperimentKind::RegularSmallBall => {
            for (n, group) in by_dimension(config, rows) {
                let max = |name: &str| values(columns, &group, name).into_iter().fold(f64::NAN, f64::max);
                if !group.is_empty() {
                    fitted_constants.insert(format!("n={n}/linear_decay"), max("max_ratio"));
                    fitted_constants.insert(format!("n={n}/linear_decay_upper"), max("max_upper_ratio"));
                }
                push(
                    format!("n={n}"),
                    group,
                    &["slope", "r_squared", "max_ratio", "attempts"],
                    &["monotone", "dominated"],
                );
            }
        }
        _ => {
            for kind in &config.params.bounds {
                let group: Vec<&Row> = rows
                    .iter()
                    .filter(|r| r.get(columns, "bound") == Some(&Cell::Text(kind.name().to_owned())))
                    .collect();
                let ratios = values(columns, &group, "ratio");
                if !ratios.is_empty() {
                    fitted_constants.insert(kind.name().to_owned(), ratios.iter().copied().fold(0.0, f64::max));
                }
                push(format!("bound={}", kind.name()), group, &["ratio"], &["dominated"]);
            }
        }
    }
    Summary {
        groups,
        fitted_constants,
        runtime_ms: 0.0,
    }
}
