//! Peaked/spread partition of the sphere, Δ-profiles and the exact
//! regular/singular profile classifier.
//!
//! Index sets are 0-based throughout.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::norm2;
use crate::rng::{derive_stream, RngStream};
use crate::scalar::Scalar;
use crate::stats::{quantile, Quantiles};

/// Radii `r < 1 < R` of the sphere partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams<T> {
    pub r: T,
    #[serde(rename = "R")]
    pub big_r: T,
}

impl<T: Scalar> PartitionParams<T> {
    pub fn new(r: T, big_r: T) -> Result<Self> {
        if !(r > T::zero() && r < T::one() && big_r > T::one()) {
            return Err(Error::config(format!("need 0 < r < 1 < R, got r = {r}, R = {big_r}")));
        }
        Ok(Self { r, big_r })
    }

    /// `m = ⌈r² n / (2R²)⌉`, the guaranteed size of `J(x)`.
    pub fn m(&self, n: usize) -> usize {
        let raw = (self.r * self.r * T::of(n as f64) / (T::of(2.0) * self.big_r * self.big_r)).as_f64();
        ((raw - 1e-9).ceil().max(1.0)) as usize
    }

    /// Coordinates at most this large form `σ(x)`.
    pub fn spike_level(&self, n: usize) -> T {
        self.big_r / T::of(n as f64).sqrt()
    }

    /// Lower edge `r/(2√n)` of the window defining `J(x)`.
    pub fn floor_level(&self, n: usize) -> T {
        self.r / (T::of(2.0) * T::of(n as f64).sqrt())
    }
}

impl<T: Scalar> Default for PartitionParams<T> {
    fn default() -> Self {
        Self {
            r: T::of(0.25),
            big_r: T::of(40.0),
        }
    }
}

/// Bin geometry for a dimension and bin width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileContext<T> {
    pub n: usize,
    pub delta: T,
    /// Largest integer with `k0·Δ < r/(2√n)`.
    pub k0: usize,
    /// `⌈(R − r/2)/(√n Δ)⌉`.
    pub k: usize,
    pub m: usize,
}

impl<T: Scalar> ProfileContext<T> {
    pub fn new(n: usize, delta: T, params: &PartitionParams<T>) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(Error::regime("profile context", format!("Δ = {delta} must be positive")));
        }
        let floor = params.floor_level(n);
        let mut k0 = ((floor / delta).ceil().as_f64() as usize).saturating_sub(1);
        while T::of((k0 + 1) as f64) * delta < floor {
            k0 += 1;
        }
        while k0 > 0 && T::of(k0 as f64) * delta >= floor {
            k0 -= 1;
        }
        let span = (params.big_r - params.r / T::of(2.0)) / (T::of(n as f64).sqrt() * delta);
        let k = span.ceil().as_f64() as usize;
        Ok(Self {
            n,
            delta,
            k0,
            k,
            m: params.m(n),
        })
    }

    /// Left endpoints `jΔ` of the intervals `(jΔ, (j+1)Δ]`, `j = k0..=k0+k`.
    pub fn interval_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.k0..=self.k0 + self.k
    }
}

/// Index `k` of the bin `(kΔ, (k+1)Δ]` holding `a ≥ 0`; `None` when `a ≤ Δ`.
pub fn bin_index<T: Scalar>(a: T, delta: T) -> Option<usize> {
    if !(a > delta) {
        return None;
    }
    let mut k = ((a / delta).ceil().as_f64() as usize).saturating_sub(1).max(1);
    while T::of(k as f64) * delta >= a {
        k -= 1;
    }
    while T::of((k + 1) as f64) * delta < a {
        k += 1;
    }
    Some(k.max(1))
}

/// Δ-profile: how many coordinates fall in each bin `(kΔ, (k+1)Δ]`, `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaProfile<T> {
    pub delta: T,
    /// Nonzero bin counts keyed by `k`.
    pub counts: BTreeMap<usize, usize>,
    /// Coordinates with `|x_j| ≤ Δ`, excluded from `counts`.
    pub below_delta: usize,
}

impl<T: Scalar> DeltaProfile<T> {
    pub fn sum_of_squares(&self) -> u64 {
        self.counts.values().map(|&c| (c as u64) * (c as u64)).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Δ-profile of `x`. Panics if `Δ ≤ 0`.
pub fn delta_profile<T: Scalar>(x: &[T], delta: T) -> DeltaProfile<T> {
    assert!(delta > T::zero(), "Δ must be positive");
    let mut counts = BTreeMap::new();
    let mut below_delta = 0;
    for &xj in x {
        match bin_index(xj.abs(), delta) {
            Some(k) => *counts.entry(k).or_insert(0) += 1,
            None => below_delta += 1,
        }
    }
    DeltaProfile {
        delta,
        counts,
        below_delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SphereClass {
    /// Norm concentrated on a few large coordinates.
    #[serde(rename = "V_P")]
    Peaked,
    /// Coordinates evenly spread.
    #[serde(rename = "V_S")]
    Spread,
}

fn check_unit<T: Scalar>(x: &[T], op: &'static str) -> Result<()> {
    let norm = norm2(x);
    let tol = T::of(1e-9).max(T::epsilon() * T::of(8.0 * x.len() as f64));
    if (norm - T::one()).abs() > tol {
        return Err(Error::regime(op, format!("‖x‖ = {norm} is not 1")));
    }
    Ok(())
}

fn sigma_projection<T: Scalar>(x: &[T], params: &PartitionParams<T>) -> (Vec<usize>, T) {
    let level = params.spike_level(x.len());
    let sigma: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() <= level).collect();
    let norm = sigma.iter().map(|&i| x[i] * x[i]).sum::<T>().sqrt();
    (sigma, norm)
}

/// Classifies a unit vector as peaked or spread; returns `σ(x)` alongside.
pub fn classify_sphere<T: Scalar>(x: &[T], params: &PartitionParams<T>) -> Result<(SphereClass, Vec<usize>)> {
    check_unit(x, "classify_sphere")?;
    let (sigma, norm) = sigma_projection(x, params);
    let class = if norm < params.r {
        SphereClass::Peaked
    } else {
        SphereClass::Spread
    };
    Ok((class, sigma))
}

/// `J(x) = {j : r/(2√n) ≤ |x_j| ≤ R/√n}` for a spread vector.
///
/// `|J(x)| ≥ m` always holds for spread vectors; a violation is reported as
/// an internal consistency error.
pub fn j_set<T: Scalar>(x: &[T], params: &PartitionParams<T>) -> Result<Vec<usize>> {
    let n = x.len();
    let (_, norm) = sigma_projection(x, params);
    if norm < params.r {
        return Err(Error::regime("j_set", "x is peaked (‖P_σ x‖ < r)"));
    }
    let lo = params.floor_level(n);
    let hi = params.spike_level(n);
    let j: Vec<usize> = (0..n).filter(|&i| lo <= x[i].abs() && x[i].abs() <= hi).collect();
    let m = params.m(n);
    if j.len() < m {
        return Err(Error::Consistency {
            op: "j_set",
            detail: format!("|J(x)| = {} < m = {m}", j.len()),
        });
    }
    Ok(j)
}

/// Minimum of `Σ c_i²` over integers `0 ≤ c_i ≤ occupancy_i` with `Σ c_i = keep`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetMinimum {
    pub min_ssq: u64,
    pub kept_per_bin: Vec<usize>,
}

/// Water-filling solution of the separable convex allocation problem. It
/// coincides with the greedy "increment the smallest `c_i`" rule, ties going
/// to the lowest bin index.
pub fn min_half_subset_ssq(occupancy: &[usize], keep: usize) -> Result<SubsetMinimum> {
    let total: usize = occupancy.iter().sum();
    if keep > total {
        return Err(Error::regime(
            "min_half_subset_ssq",
            format!("keep = {keep} exceeds total occupancy {total}"),
        ));
    }
    let filled = |level: usize| occupancy.iter().map(|&o| o.min(level)).sum::<usize>();
    // largest level with filled(level) ≤ keep
    let (mut lo, mut hi) = (0usize, occupancy.iter().copied().max().unwrap_or(0));
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if filled(mid) <= keep {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let level = lo;
    let mut kept: Vec<usize> = occupancy.iter().map(|&o| o.min(level)).collect();
    let mut remaining = keep - filled(level);
    for (c, &o) in kept.iter_mut().zip(occupancy) {
        if remaining == 0 {
            break;
        }
        if o > level {
            *c += 1;
            remaining -= 1;
        }
    }
    debug_assert_eq!(remaining, 0);
    let min_ssq = kept.iter().map(|&c| (c as u64) * (c as u64)).sum();
    Ok(SubsetMinimum {
        min_ssq,
        kept_per_bin: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Regular,
    Singular,
}

/// Full record of the profile classification of a spread vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileClassification<T> {
    pub sphere_class: SphereClass,
    pub sigma_set: Vec<usize>,
    pub j_set: Vec<usize>,
    pub m: usize,
    /// Subset size `⌈m/2⌉` the minimum is taken over.
    pub keep: usize,
    pub context: ProfileContext<T>,
    /// Δ-profile of `x` restricted to `J(x)`.
    pub profile: DeltaProfile<T>,
    pub min_ssq: u64,
    pub kept_per_bin: BTreeMap<usize, usize>,
    /// `Q · m^{5/2} · Δ`.
    pub threshold: T,
    pub verdict: Verdict,
    /// `Δ ≤ r/(4π√n)`; outside it the classification is still exact but
    /// the small-ball statements do not apply.
    pub halasz_regime: bool,
}

/// Decides whether a spread vector has a (Δ,Q)-regular profile by exact
/// minimization over subsets of `J(x)` of size `⌈m/2⌉`.
///
/// Coordinates in one bin are interchangeable for the objective, so it is
/// enough to choose how many to keep per bin. Coordinates of `J(x)` at or
/// below `Δ` (possible only outside the Halász regime) cost nothing and are
/// kept first.
pub fn classify_profile<T: Scalar>(
    x: &[T],
    params: &PartitionParams<T>,
    delta: T,
    q: T,
) -> Result<ProfileClassification<T>> {
    if !(q > T::one()) {
        return Err(Error::regime("classify_profile", format!("Q = {q} must exceed 1")));
    }
    let n = x.len();
    let context = ProfileContext::new(n, delta, params)?;
    let (sphere_class, sigma_set) = classify_sphere(x, params)?;
    if sphere_class == SphereClass::Peaked {
        return Err(Error::regime("classify_profile", "x is in V_P; profiles classify V_S only"));
    }
    let j = j_set(x, params)?;
    let restricted: Vec<T> = j.iter().map(|&i| x[i]).collect();
    let profile = delta_profile(&restricted, delta);
    let m = context.m;
    let keep = m.div_ceil(2);
    let bins: Vec<usize> = profile.counts.keys().copied().collect();
    let occupancy: Vec<usize> = profile.counts.values().copied().collect();
    let binned_keep = keep.saturating_sub(profile.below_delta);
    let best = min_half_subset_ssq(&occupancy, binned_keep)?;
    let kept_per_bin = bins
        .iter()
        .zip(&best.kept_per_bin)
        .filter(|(_, &c)| c > 0)
        .map(|(&b, &c)| (b, c))
        .collect();
    let threshold = q * T::of(m as f64).powf(T::of(2.5)) * delta;
    let verdict = if T::of(best.min_ssq as f64) <= threshold {
        Verdict::Regular
    } else {
        Verdict::Singular
    };
    let halasz_limit = params.r / (T::of(4.0 * std::f64::consts::PI) * T::of(n as f64).sqrt());
    Ok(ProfileClassification {
        sphere_class,
        sigma_set,
        j_set: j,
        m,
        keep,
        context,
        profile,
        min_ssq: best.min_ssq,
        kept_per_bin,
        threshold,
        verdict,
        halasz_regime: delta <= halasz_limit,
    })
}

/// Occupancy counts of `l` balls thrown uniformly into `k` urns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AllocationInstance {
    pub l: usize,
    pub k: usize,
    pub occupancy: Vec<usize>,
}

impl AllocationInstance {
    /// `min Σ c_i² · k / l²` over sub-allocations keeping `⌈l/2⌉` balls.
    pub fn normalized_statistic(&self) -> f64 {
        let best = min_half_subset_ssq(&self.occupancy, self.l.div_ceil(2)).expect("keep ≤ l");
        best.min_ssq as f64 * self.k as f64 / (self.l as f64 * self.l as f64)
    }
}

pub fn sample_allocation(l: usize, k: usize, rng: &mut RngStream) -> Result<AllocationInstance> {
    if l == 0 || k == 0 || k > l {
        return Err(Error::regime("sample_allocation", format!("need 1 ≤ k ≤ l, got l = {l}, k = {k}")));
    }
    let mut occupancy = vec![0usize; k];
    for _ in 0..l {
        occupancy[rng.below(k)] += 1;
    }
    Ok(AllocationInstance { l, k, occupancy })
}

/// Constant `C(η) = η^{-16}` of the random-allocation concentration bound.
pub fn allocation_constant(eta: f64) -> f64 {
    eta.powi(-16)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    pub l: usize,
    pub k: usize,
    /// Normalized statistic per trial, in trial order.
    pub statistics: Vec<f64>,
    pub quantiles: Quantiles,
    pub p99: f64,
    /// Largest observed statistic: the empirical constant.
    pub fitted_constant: f64,
}

impl AllocationReport {
    /// Trials whose statistic exceeds `threshold`.
    pub fn failures_at(&self, threshold: f64) -> usize {
        self.statistics.iter().filter(|&&s| s > threshold).count()
    }
}

/// Empirical distribution of the normalized half-subset statistic; trial
/// `i` draws from `derive_stream(master_seed, i)`.
pub fn allocation_concentration_experiment(
    l: usize,
    k: usize,
    trials: usize,
    master_seed: u64,
) -> Result<AllocationReport> {
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let statistics = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_stream(master_seed, i as u64);
            sample_allocation(l, k, &mut rng).map(|a| a.normalized_statistic())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AllocationReport {
        l,
        k,
        quantiles: Quantiles::of(&statistics),
        p99: quantile(&statistics, 0.99),
        fitted_constant: statistics.iter().copied().fold(f64::MIN, f64::max),
        statistics,
    })
}
