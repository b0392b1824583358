use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::BoundKind;
use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};
use crate::matrices::MAX_DIMENSION;
use crate::sphere_profile::PartitionParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Smallest singular value against the `ε n^{−3/2}` threshold.
    #[serde(rename = "E1_sigma_min_tail")]
    SigmaMinTail,
    /// Operator norm against `C√n`.
    #[serde(rename = "E2_op_norm")]
    OpNorm,
    /// `‖Ax‖` for a fixed peaked direction.
    #[serde(rename = "E2b_peaked")]
    Peaked,
    /// Linear small-ball decay along regular-profile directions.
    #[serde(rename = "E3_regular_smallball")]
    RegularSmallBall,
    /// Random allocation concentration.
    #[serde(rename = "E4_allocation")]
    Allocation,
    /// Sphere and profile classes of random directions.
    #[serde(rename = "E5_profile_census")]
    ProfileCensus,
    /// Exact concentration against the constant-free bounds.
    #[serde(rename = "E6_bound_calibration")]
    BoundCalibration,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SigmaMinTail,
        ExperimentKind::OpNorm,
        ExperimentKind::Peaked,
        ExperimentKind::RegularSmallBall,
        ExperimentKind::Allocation,
        ExperimentKind::ProfileCensus,
        ExperimentKind::BoundCalibration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SigmaMinTail => "E1_sigma_min_tail",
            ExperimentKind::OpNorm => "E2_op_norm",
            ExperimentKind::Peaked => "E2b_peaked",
            ExperimentKind::RegularSmallBall => "E3_regular_smallball",
            ExperimentKind::Allocation => "E4_allocation",
            ExperimentKind::ProfileCensus => "E5_profile_census",
            ExperimentKind::BoundCalibration => "E6_bound_calibration",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s) || k.name()[..k.name().find('_').unwrap()].eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse {
                what: "experiment",
                detail: format!("unknown experiment `{s}`"),
            })
    }
}

/// Experiment-specific parameters. Keys a given experiment does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    /// E1: `σ_min < tail_constant · ε · n^{−3/2}` is the tail event.
    pub eps: f64,
    pub tail_constant: f64,
    /// E2: `‖A‖ > op_norm_factor · √n` is the large-norm event.
    pub op_norm_factor: f64,
    /// E2b: `x` has `spikes` equal coordinates `1/√spikes`.
    pub spikes: usize,
    /// E2b: `‖Ax‖ ≤ spike_threshold · √n` is the small-image event.
    pub spike_threshold: f64,
    /// E3/E5: sphere partition radii.
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// E3/E5: bin width and regularity constant.
    pub delta: f64,
    pub q: f64,
    /// E3: windows `t = multiple · Δ`.
    pub t_multiples: Vec<f64>,
    /// E3: Monte Carlo draws per direction.
    pub mc_trials: u64,
    /// E3: cap on rejection sampling of regular directions.
    pub max_attempts: usize,
    /// E4: `C(η)` failure threshold and urn count (`l` when unset).
    pub eta: f64,
    pub urns: Option<usize>,
    /// E6: which bounds to calibrate.
    pub bounds: Vec<BoundKind>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            eps: 0.1,
            tail_constant: 1.0,
            op_norm_factor: 2.5,
            spikes: 2,
            spike_threshold: 0.3,
            r: 0.5,
            big_r: 1.5,
            delta: 0.02,
            q: 4.0,
            t_multiples: (1..=8).map(f64::from).collect(),
            mc_trials: 200_000,
            max_attempts: 1000,
            eta: 0.5,
            urns: None,
            bounds: BoundKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_dist")]
    pub dist: EntryDistribution,
    #[serde(default)]
    pub n_list: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub params: ExperimentParams,
    /// Worker threads; 1 runs serially, unset uses every core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Record wall-clock times. Off by default so output is byte-stable.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_dist() -> EntryDistribution {
    EntryDistribution::Rademacher
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, dist: EntryDistribution, n_list: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        Self {
            experiment,
            dist,
            n_list,
            trials,
            master_seed,
            params: ExperimentParams::default(),
            threads: None,
            record_timing: false,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config = Self::parse_toml(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses without [`validate`](Self::validate), for callers that apply
    /// overrides first.
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "config",
            detail: e.to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let config = Self::read_path(path)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and parses a config file without validating it.
    pub fn read_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_toml(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |msg: String| Err(Error::config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.experiment != ExperimentKind::BoundCalibration && self.n_list.is_empty() {
            return bad("n_list must not be empty".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0) {
            return bad(format!("dimension {n} in n_list"));
        }
        let mut sorted = self.n_list.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("n_list has repeated dimensions".into());
        }
        match self.experiment {
            ExperimentKind::SigmaMinTail | ExperimentKind::OpNorm | ExperimentKind::Peaked => {
                if let Some(&n) = self.n_list.iter().find(|&&n| n > MAX_DIMENSION) {
                    return bad(format!("n = {n} exceeds {MAX_DIMENSION}"));
                }
                if !(p.eps > 0.0 && p.tail_constant > 0.0 && p.op_norm_factor > 0.0 && p.spike_threshold > 0.0) {
                    return bad("eps, tail_constant, op_norm_factor and spike_threshold must be positive".into());
                }
                if self.experiment == ExperimentKind::Peaked {
                    if p.spikes == 0 {
                        return bad("spikes must be at least 1".into());
                    }
                    if let Some(&n) = self.n_list.iter().find(|&&n| n < p.spikes) {
                        return bad(format!("n = {n} is smaller than spikes = {}", p.spikes));
                    }
                }
            }
            ExperimentKind::RegularSmallBall | ExperimentKind::ProfileCensus => {
                PartitionParams::new(p.r, p.big_r)?;
                if !(p.delta > 0.0 && p.q > 1.0) {
                    return bad("delta must be positive and q must exceed 1".into());
                }
                if self.experiment == ExperimentKind::RegularSmallBall {
                    if p.t_multiples.len() < 2 || p.t_multiples.iter().any(|&c| !(c >= 1.0)) {
                        return bad("t_multiples needs at least two entries, each ≥ 1 (t ≥ Δ)".into());
                    }
                    if p.t_multiples.windows(2).any(|w| w[0] >= w[1]) {
                        return bad("t_multiples must be strictly increasing".into());
                    }
                    if p.mc_trials < 100 || p.max_attempts == 0 {
                        return bad("mc_trials must be at least 100 and max_attempts at least 1".into());
                    }
                }
            }
            ExperimentKind::Allocation => {
                if !(p.eta > 0.0 && p.eta < 1.0) {
                    return bad(format!("eta = {} must lie in (0, 1)", p.eta));
                }
                if let Some(k) = p.urns {
                    if let Some(&l) = self.n_list.iter().find(|&&l| k == 0 || k > l) {
                        return bad(format!("urns = {k} must lie in 1..={l}"));
                    }
                }
            }
            ExperimentKind::BoundCalibration => {
                if p.bounds.is_empty() {
                    return bad("bounds must not be empty".into());
                }
                if self.dist != EntryDistribution::Rademacher {
                    return bad("the calibration corpora use rademacher coefficients".into());
                }
            }
        }
        Ok(())
    }
}
