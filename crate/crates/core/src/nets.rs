//! Covering-number formulas and explicit nets to check them against.
//!
//! Covers are external: net points need not belong to the covered set.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sphere_profile::{classify_sphere, PartitionParams, ProfileContext, SphereClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringKind {
    VolumetricFormula,
    VpEntropyFormula,
    SingularGridFormula,
    GreedyConstruction,
}

/// Natural log of a covering number or of an upper bound for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringEstimate {
    pub log_count: f64,
    pub kind: CoveringKind,
    pub params: BTreeMap<String, Value>,
    /// The realized net for constructions in dimension at most 8.
    pub points: Option<Vec<Vec<f64>>>,
}

/// Symmetric convex bodies with known volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    /// Unit Euclidean ball `B₂ⁿ`.
    EuclideanBall,
    /// Cube `[−1, 1]ⁿ = B_∞ⁿ`.
    Cube,
}

impl Body {
    pub fn log_volume(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Body::EuclideanBall => 0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0),
            Body::Cube => n * std::f64::consts::LN_2,
        }
    }

    /// Largest `s` with `s·D ⊆ self` where `D = inner`.
    fn containment_scale(self, inner: Body, n: usize) -> f64 {
        match (self, inner) {
            (Body::Cube, Body::EuclideanBall) | (Body::Cube, Body::Cube) | (Body::EuclideanBall, Body::EuclideanBall) => 1.0,
            (Body::EuclideanBall, Body::Cube) => 1.0 / (n as f64).sqrt(),
        }
    }

    /// Metric whose unit ball is this body.
    pub fn metric(self) -> Metric {
        match self {
            Body::EuclideanBall => Metric::L2,
            Body::Cube => Metric::Linf,
        }
    }
}

/// `ln N(K, D, t) ≤ n ln 3 + ln|K| − ln|tD|`, valid when `tD ⊆ K`.
pub fn volumetric_bound(n: usize, k: Body, d: Body, t: f64) -> Result<CoveringEstimate> {
    if n == 0 || !(t > 0.0) {
        return Err(Error::regime("volumetric_bound", "need n ≥ 1 and t > 0"));
    }
    let scale = k.containment_scale(d, n);
    if t > scale * (1.0 + 1e-12) {
        return Err(Error::regime(
            "volumetric_bound",
            format!("tD ⊆ K fails: t = {t} exceeds {scale}"),
        ));
    }
    let log_count = n as f64 * 3f64.ln() + k.log_volume(n) - (n as f64 * t.ln() + d.log_volume(n));
    Ok(CoveringEstimate {
        log_count,
        kind: CoveringKind::VolumetricFormula,
        params: BTreeMap::from([
            ("n".into(), Value::from(n)),
            ("K".into(), serde_json::to_value(k).expect("enum")),
            ("D".into(), serde_json::to_value(d).expect("enum")),
            ("t".into(), Value::from(t)),
        ]),
        points: None,
    })
}

/// `ln N(V_P, B₂ⁿ, 2r) ≤ (n/R) ln(3R/r)` for `r < 1/2`.
pub fn vp_entropy_bound(n: usize, r: f64, big_r: f64) -> Result<CoveringEstimate> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::regime("vp_entropy_bound", format!("r < 1/2 fails: r = {r}")));
    }
    if !(big_r > 1.0) {
        return Err(Error::regime("vp_entropy_bound", format!("R > 1 fails: R = {big_r}")));
    }
    Ok(CoveringEstimate {
        log_count: n as f64 / big_r * (3.0 * big_r / r).ln(),
        kind: CoveringKind::VpEntropyFormula,
        params: BTreeMap::from([
            ("n".into(), Value::from(n)),
            ("r".into(), Value::from(r)),
            ("R".into(), Value::from(big_r)),
        ]),
        points: None,
    })
}

/// Product grid on the coordinates `J`: every `|x_j|` is the center of one
/// of the intervals `(iΔ, (i+1)Δ]`, `i = k0..=k0+k`, with either sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularGrid {
    pub n: usize,
    pub delta: f64,
    pub j: Vec<usize>,
    pub k0: usize,
    pub k: usize,
    /// Interval centers `d_i`.
    pub centers: Vec<f64>,
    /// `l · ln(2k)` with `l = |J|`.
    pub log_cardinality: f64,
    /// `l · ln(2 · centers.len())`, the size of the emitted grid.
    pub realized_log_cardinality: f64,
    /// Exponent `c = m/n = r²/(2R²)` of the cardinality gain.
    pub gain_exponent: f64,
}

impl SingularGrid {
    /// Nearest grid value for each `J`-coordinate of `y` (`y` indexed by
    /// the full coordinate set). Coordinates outside the covered annulus
    /// snap to the nearest extreme center.
    pub fn snap(&self, y: &[f64]) -> Vec<f64> {
        self.j
            .iter()
            .map(|&j| {
                let a = y[j].abs();
                let idx = crate::sphere_profile::bin_index(a, self.delta)
                    .unwrap_or(0)
                    .clamp(self.k0, self.k0 + self.k)
                    - self.k0;
                self.centers[idx].copysign(y[j])
            })
            .collect()
    }

    /// Interval index `i − k0` of each `J`-coordinate.
    pub fn cell(&self, y: &[f64]) -> Vec<usize> {
        self.j
            .iter()
            .map(|&j| {
                crate::sphere_profile::bin_index(y[j].abs(), self.delta)
                    .unwrap_or(0)
                    .clamp(self.k0, self.k0 + self.k)
                    - self.k0
            })
            .collect()
    }
}

/// Grid net for singular-profile vectors restricted to `J`, in the range
/// `(2R³/r²) n^{−3/2} ≤ Δ ≤ n^{−1/2}`.
pub fn singular_grid_net(n: usize, delta: f64, r: f64, big_r: f64, j: &[usize]) -> Result<SingularGrid> {
    let params = PartitionParams::new(r, big_r)?;
    let nf = n as f64;
    let lower = 2.0 * big_r.powi(3) / (r * r) * nf.powf(-1.5);
    let upper = nf.powf(-0.5);
    if !(delta >= lower && delta <= upper) {
        return Err(Error::regime(
            "singular_grid_net",
            format!("(2R³/r²)n^(-3/2) ≤ Δ ≤ n^(-1/2) fails: Δ = {delta}, range [{lower}, {upper}]"),
        ));
    }
    let ctx = ProfileContext::new(n, delta, &params)?;
    if j.len() < ctx.m || j.iter().any(|&i| i >= n) {
        return Err(Error::regime(
            "singular_grid_net",
            format!("J must be a subset of 0..{n} with |J| ≥ m = {}", ctx.m),
        ));
    }
    let centers: Vec<f64> = ctx.interval_indices().map(|i| (i as f64 + 0.5) * delta).collect();
    let l = j.len() as f64;
    Ok(SingularGrid {
        n,
        delta,
        j: j.to_vec(),
        k0: ctx.k0,
        k: ctx.k,
        log_cardinality: l * (2.0 * ctx.k as f64).ln(),
        realized_log_cardinality: l * (2.0 * centers.len() as f64).ln(),
        gain_exponent: r * r / (2.0 * big_r * big_r),
        centers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L2,
    Linf,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::L2 => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
            Metric::Linf => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        }
    }
}

/// Farthest-point greedy ε-net of a finite point set. The result is a
/// subset of the input that covers it within `ε`; its points are pairwise
/// more than `ε` apart.
pub fn greedy_net(points: &[Vec<f64>], metric: Metric, eps: f64) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(Error::regime("greedy_net", "empty point set"));
    }
    if !(eps > 0.0) {
        return Err(Error::regime("greedy_net", format!("ε = {eps} must be positive")));
    }
    let mut net = vec![0usize];
    let mut nearest: Vec<f64> = points.iter().map(|p| metric.distance(p, &points[0])).collect();
    loop {
        let (far, &dist) = nearest
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        if dist <= eps {
            break;
        }
        net.push(far);
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(metric.distance(p, &points[far]));
        }
    }
    Ok(net.into_iter().map(|i| points[i].clone()).collect())
}

/// Largest distance from a point to its nearest net point.
pub fn cover_radius(points: &[Vec<f64>], net: &[Vec<f64>], metric: Metric) -> f64 {
    points
        .iter()
        .map(|p| net.iter().map(|c| metric.distance(p, c)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Greedy net packaged as a covering estimate.
pub fn greedy_estimate(points: &[Vec<f64>], metric: Metric, eps: f64) -> Result<CoveringEstimate> {
    let net = greedy_net(points, metric, eps)?;
    let dim = points[0].len();
    Ok(CoveringEstimate {
        log_count: (net.len() as f64).ln(),
        kind: CoveringKind::GreedyConstruction,
        params: BTreeMap::from([
            ("n".into(), Value::from(dim)),
            ("eps".into(), Value::from(eps)),
            ("metric".into(), serde_json::to_value(metric).expect("enum")),
            ("sample_size".into(), Value::from(points.len())),
            ("net_size".into(), Value::from(net.len())),
        ]),
        points: (dim <= 8).then_some(net),
    })
}

/// Uniform point of a body: Gaussian direction with radius `U^{1/n}` for the
/// ball, independent uniform coordinates for the cube.
pub fn sample_body(body: Body, n: usize, rng: &mut RngStream) -> Vec<f64> {
    match body {
        Body::Cube => (0..n).map(|_| 2.0 * rng.uniform() - 1.0).collect(),
        Body::EuclideanBall => {
            let mut x = unit_direction(n, rng);
            let radius = rng.uniform().powf(1.0 / n as f64);
            x.iter_mut().for_each(|v| *v *= radius);
            x
        }
    }
}

fn unit_direction(n: usize, rng: &mut RngStream) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Random peaked unit vector: a large part on at most `n/R²` coordinates
/// plus a remainder of norm below `r` on the others, kept only if
/// [`classify_sphere`] puts it in `V_P`. `V_P` is empty unless `R < √n`.
pub fn sample_peaked(n: usize, params: &PartitionParams<f64>, rng: &mut RngStream) -> Result<Vec<f64>> {
    const OP: &str = "sample_peaked";
    const MAX_ATTEMPTS: usize = 100_000;
    if params.big_r * params.big_r >= n as f64 {
        return Err(Error::regime(OP, format!("R < √n fails: R = {}, n = {n}", params.big_r)));
    }
    let big = ((n as f64 / (params.big_r * params.big_r)).floor() as usize).clamp(1, n);
    for _ in 0..MAX_ATTEMPTS {
        let s = 1 + rng.below(big);
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..s {
            let j = i + rng.below(n - i);
            order.swap(i, j);
        }
        let small = params.r * rng.uniform();
        let mut x = vec![0.0; n];
        for (k, v) in unit_direction(s, rng).into_iter().enumerate() {
            x[order[k]] = v * (1.0 - small * small).sqrt();
        }
        if s < n {
            for (k, v) in unit_direction(n - s, rng).into_iter().enumerate() {
                x[order[s + k]] = v * small;
            }
        }
        if matches!(classify_sphere(&x, params), Ok((SphereClass::Peaked, _))) {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        op: OP,
        detail: format!("no peaked vector in {MAX_ATTEMPTS} draws"),
    })
}

/// Greedy net of sampled points next to the formula it should not exceed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetCheck {
    pub formula: CoveringEstimate,
    pub greedy: CoveringEstimate,
    pub cover_radius: f64,
}

impl NetCheck {
    pub fn within_formula(&self) -> bool {
        self.greedy.log_count <= self.formula.log_count
    }
}

/// Greedy `t`-net, in the metric of `D`, of `samples` uniform points of `K`.
pub fn volumetric_check(n: usize, k: Body, d: Body, t: f64, samples: usize, seed: u64) -> Result<NetCheck> {
    let formula = volumetric_bound(n, k, d, t)?;
    let mut rng = RngStream::new(seed);
    let points: Vec<Vec<f64>> = (0..samples).map(|_| sample_body(k, n, &mut rng)).collect();
    let greedy = greedy_estimate(&points, d.metric(), t)?;
    let net = greedy.points.clone().unwrap_or_else(|| greedy_net(&points, d.metric(), t).expect("nonempty"));
    Ok(NetCheck {
        cover_radius: cover_radius(&points, &net, d.metric()),
        formula,
        greedy,
    })
}

/// Greedy `2r`-net of `samples` peaked unit vectors.
pub fn vp_check(n: usize, r: f64, big_r: f64, samples: usize, seed: u64) -> Result<NetCheck> {
    let formula = vp_entropy_bound(n, r, big_r)?;
    let params = PartitionParams::new(r, big_r)?;
    let mut rng = RngStream::new(seed);
    let points = (0..samples).map(|_| sample_peaked(n, &params, &mut rng)).collect::<Result<Vec<_>>>()?;
    let greedy = greedy_estimate(&points, Metric::L2, 2.0 * r)?;
    let net = greedy.points.clone().unwrap_or_else(|| greedy_net(&points, Metric::L2, 2.0 * r).expect("nonempty"));
    Ok(NetCheck {
        cover_radius: cover_radius(&points, &net, Metric::L2),
        formula,
        greedy,
    })
}
