//! Fitted constants for the constant-free small-ball bounds.
//!
//! Each bound is evaluated on a seeded corpus of queries inside its regime
//! and compared with the exact concentration function `sup_v P(|S − v| < t)`.
//! The fitted constant is the largest ratio exact/bound over the corpus. The
//! values below were produced by [`fit`] on [`CALIBRATION_SEED`] and are
//! checked against a disjoint corpus drawn from [`VALIDATION_SEED`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, ExperimentKind};
use crate::rng::{derive_stream, RngStream};
use crate::small_ball::{
    berry_esseen_bound, esseen_bound, halasz_integral_bound, halasz_profile_bound, levy_concentration,
    BerryEsseenRegime, SmallBallQuery,
};

pub const CALIBRATION_SEED: u64 = 0x00C0_FFEE;
pub const VALIDATION_SEED: u64 = 0x0BAD_5EED;
pub const CALIBRATION_SIZE: usize = 1000;
/// Size of the validation corpus.
pub const CORPUS_SIZE: usize = 200;

/// Coordinate window and lower limit on `t` of the Berry–Esseen corpus.
pub const BERRY_ESSEEN_REGIME: BerryEsseenRegime = BerryEsseenRegime {
    r: 0.5,
    big_r: 2.0,
    c: 1.0,
};

/// Spread `max|x_j| / min|x_j|` of the Halász corpora.
pub const HALASZ_SPREAD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Esseen,
    HalaszProfile,
    HalaszIntegral,
    BerryEsseen,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::Esseen,
        BoundKind::HalaszProfile,
        BoundKind::HalaszIntegral,
        BoundKind::BerryEsseen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Esseen => "esseen",
            BoundKind::HalaszProfile => "halasz_profile",
            BoundKind::HalaszIntegral => "halasz_integral",
            BoundKind::BerryEsseen => "berry_esseen",
        }
    }

    /// Frozen constant `C` with `Q ≤ C · bound` on the validation corpus.
    pub fn frozen_constant(self) -> f64 {
        match self {
            BoundKind::Esseen => ESSEEN_CONSTANT,
            BoundKind::HalaszProfile => HALASZ_PROFILE_CONSTANT,
            BoundKind::HalaszIntegral => HALASZ_INTEGRAL_CONSTANT,
            BoundKind::BerryEsseen => BERRY_ESSEEN_CONSTANT,
        }
    }
}

// fit(&corpus(kind, CALIBRATION_SIZE, CALIBRATION_SEED))
pub const ESSEEN_CONSTANT: f64 = 0.49060254168915746;
pub const HALASZ_PROFILE_CONSTANT: f64 = 0.6880842466006047;
pub const HALASZ_INTEGRAL_CONSTANT: f64 = 0.7692393968284277;
pub const BERRY_ESSEEN_CONSTANT: f64 = 0.5142050871931505;

/// Constant `C` of the linear decay `Q(t) ≤ C · Q · t` along regular
/// directions, fitted from the interval tops of
/// [`linear_decay_calibration_config`].
pub const LINEAR_DECAY_CONSTANT: f64 = 0.20890006638967784;

/// E3 setup the linear-decay constant is fitted on: twenty regular
/// directions at n = 64 with the default partition, Δ and Q.
pub fn linear_decay_calibration_config() -> ExperimentConfig {
    ExperimentConfig::new(
        ExperimentKind::RegularSmallBall,
        EntryDistribution::Rademacher,
        vec![64],
        20,
        CALIBRATION_SEED,
    )
}

/// One corpus query with its exact concentration and constant-free bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCase {
    pub index: usize,
    pub x: Vec<f64>,
    pub t: f64,
    pub exact: f64,
    pub bound: f64,
}

impl CalibrationCase {
    pub fn ratio(&self) -> f64 {
        self.exact / self.bound
    }
}

fn signed(magnitude: f64, rng: &mut RngStream) -> f64 {
    if rng.coin() {
        magnitude
    } else {
        -magnitude
    }
}

fn log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.uniform()).exp()
}

/// Draws the weights and window of a case. Every corpus uses Rademacher
/// coefficients. The Halász corpora start at twelve terms: with fewer, single
/// coincidences between weights dominate the concentration function and the
/// fitted ratio jumps between reseeds.
fn draw(kind: BoundKind, rng: &mut RngStream) -> (Vec<f64>, f64) {
    match kind {
        BoundKind::Esseen => {
            let m = 2 + rng.below(13);
            let x: Vec<f64> = (0..m).map(|_| signed(0.1 + 0.9 * rng.uniform(), rng)).collect();
            let norm = x.iter().map(|w| w * w).sum::<f64>().sqrt();
            let t = norm * log_uniform(rng, 0.03, 1.0);
            (x, t)
        }
        BoundKind::HalaszProfile | BoundKind::HalaszIntegral => {
            let m = 12 + rng.below(7);
            // a = 1 is attained by the first weight
            let x: Vec<f64> = (0..m)
                .map(|j| {
                    let w = if j == 0 { 1.0 } else { 1.0 + (HALASZ_SPREAD - 1.0) * rng.uniform() };
                    signed(w, rng)
                })
                .collect();
            let t = log_uniform(rng, 0.01, 0.99 / (2.0 * PI));
            (x, t)
        }
        BoundKind::BerryEsseen => {
            let regime = BERRY_ESSEEN_REGIME;
            let m = 8 + rng.below(11);
            let root = (m as f64).sqrt();
            let x: Vec<f64> = (0..m)
                .map(|_| signed((regime.r + (regime.big_r - regime.r) * rng.uniform()) / root, rng))
                .collect();
            let t = regime.c / root * log_uniform(rng, 1.0, 4.0);
            (x, t)
        }
    }
}

fn bound_value(kind: BoundKind, x: &[f64], t: f64) -> Result<f64> {
    let dist = EntryDistribution::Rademacher;
    let est = match kind {
        BoundKind::Esseen => esseen_bound(&SmallBallQuery::new(x.to_vec(), dist, 0.0, t)?)?,
        BoundKind::HalaszProfile => halasz_profile_bound(x, t)?,
        BoundKind::HalaszIntegral => {
            let a = x.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
            halasz_integral_bound(x, &dist, t, a)?
        }
        // the Gaussian part is largest at v = 0, so this bounds every center
        BoundKind::BerryEsseen => {
            berry_esseen_bound(&SmallBallQuery::new(x.to_vec(), dist, 0.0, t)?, &BERRY_ESSEEN_REGIME)?
        }
    };
    Ok(est.value)
}

/// Evaluates case `index` of the corpus seeded by `seed`.
pub fn case(kind: BoundKind, seed: u64, index: usize) -> Result<CalibrationCase> {
    let mut rng = derive_stream(seed, index as u64);
    let (x, t) = draw(kind, &mut rng);
    let exact = levy_concentration(&x, &EntryDistribution::Rademacher, t)?;
    let bound = bound_value(kind, &x, t)?;
    Ok(CalibrationCase {
        index,
        x,
        t,
        exact,
        bound,
    })
}

/// The first `size` cases of the corpus seeded by `seed`.
pub fn corpus(kind: BoundKind, size: usize, seed: u64) -> Result<Vec<CalibrationCase>> {
    (0..size)
        .into_par_iter()
        .map(|i| {
            case(kind, seed, i).map_err(|e| Error::Trial {
                trial: i as u64,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Largest ratio exact/bound over a corpus.
pub fn fit(cases: &[CalibrationCase]) -> f64 {
    cases.iter().map(CalibrationCase::ratio).fold(0.0, f64::max)
}

/// Cases violating `exact ≤ constant · bound`.
pub fn violations(cases: &[CalibrationCase], constant: f64) -> Vec<usize> {
    cases
        .iter()
        .filter(|c| c.exact > constant * c.bound)
        .map(|c| c.index)
        .collect()
}
