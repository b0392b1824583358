//! Small-ball (Lévy concentration) probabilities of weighted sums
//! `S = Σ_j β_j x_j` with i.i.d. entries `β_j`.
//!
//! [`exact_concentration`] and [`monte_carlo_concentration`] measure
//! `P(|S − v| < t)`; the remaining functions evaluate upper bounds in
//! constant-free form. Their absolute constants are fitted by the
//! calibration experiment and frozen in [`crate::calibration`].

mod bounds;
mod exact;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};

pub use bounds::{
    berry_esseen_bound, esseen_bound, halasz_integral_bound, halasz_profile_bound, s_delta,
    tensorization_bound, tensorization_constant, BerryEsseenRegime,
};
pub use exact::{
    exact_by_convolution, exact_by_enumeration, exact_concentration, monte_carlo_concentration,
    monte_carlo_window_counts, levy_concentration, ENUMERATION_LIMIT, LEVY_LIMIT,
};

/// `P(|Σ β_j x_j − v| < t)` for `β_j` i.i.d. from `dist`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallQuery {
    pub x: Vec<f64>,
    pub dist: EntryDistribution,
    pub v: f64,
    pub t: f64,
}

impl SmallBallQuery {
    pub fn new(x: Vec<f64>, dist: EntryDistribution, v: f64, t: f64) -> Result<Self> {
        let q = Self { x, dist, v, t };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::regime("small-ball query", format!("t = {} must be positive", self.t)));
        }
        if !self.v.is_finite() || self.x.iter().any(|x| !x.is_finite()) {
            return Err(Error::regime("small-ball query", "non-finite input"));
        }
        if self.x.iter().all(|&x| x == 0.0) {
            return Err(Error::regime("small-ball query", "x must be nonzero"));
        }
        Ok(())
    }

    pub fn l1_norm(&self) -> f64 {
        self.x.iter().map(|x| x.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.x.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Convolution,
    MonteCarlo,
    EsseenBound,
    HalaszProfileBound,
    HalaszIntegralBound,
    BerryEsseenBound,
}

impl Method {
    pub const BOUNDS: [Method; 4] = [
        Method::EsseenBound,
        Method::HalaszProfileBound,
        Method::HalaszIntegralBound,
        Method::BerryEsseenBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Convolution => "convolution",
            Method::MonteCarlo => "monte_carlo",
            Method::EsseenBound => "esseen_bound",
            Method::HalaszProfileBound => "halasz_profile_bound",
            Method::HalaszIntegralBound => "halasz_integral_bound",
            Method::BerryEsseenBound => "berry_esseen_bound",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Method::Exact,
            Method::Convolution,
            Method::MonteCarlo,
            Method::EsseenBound,
            Method::HalaszProfileBound,
            Method::HalaszIntegralBound,
            Method::BerryEsseenBound,
        ];
        let key = s.trim().replace('-', "_");
        all.into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Parse {
                what: "method",
                detail: format!("unknown method `{s}`"),
            })
    }
}

/// A small-ball probability or one of its upper bounds.
///
/// Probabilities lie in `[0, 1]`. Bound methods report the raw constant-free
/// bound, which may exceed 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub value: f64,
    pub method: Method,
    pub ci: Option<(f64, f64)>,
    pub metadata: BTreeMap<String, Value>,
}

impl ConcentrationEstimate {
    pub(crate) fn new(value: f64, method: Method) -> Self {
        Self {
            value,
            method,
            ci: None,
            metadata: BTreeMap::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_owned(), value.into());
        self
    }
}
