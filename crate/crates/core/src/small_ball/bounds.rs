use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ConcentrationEstimate, Method, SmallBallQuery};
use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::sphere_profile::delta_profile;
use crate::stats::normal_cdf;

const QUAD_TOL: f64 = 1e-8;
const QUAD_DEPTH: u32 = 40;

/// `c_E · ∫_{−π/2}^{π/2} ∏_j |φ(x_j s / t)| ds` with `c_E = 1`.
pub fn esseen_bound(q: &SmallBallQuery) -> Result<ConcentrationEstimate> {
    q.validate()?;
    let integrand = |s: f64| {
        q.x.iter()
            .map(|&w| q.dist.char_fn(w * s / q.t).abs())
            .product::<f64>()
    };
    // |φ| is even
    let quad = integrate(integrand, 0.0, PI / 2.0, QUAD_TOL / 2.0, QUAD_DEPTH);
    if !quad.converged {
        return Err(Error::NonConvergence {
            op: "esseen_bound",
            detail: format!("error estimate {:.3e} after {} intervals", quad.error, quad.intervals),
        });
    }
    let integral = 2.0 * quad.value;
    Ok(ConcentrationEstimate::new(integral, Method::EsseenBound)
        .with("constant", 1.0)
        .with("integral", integral)
        .with("quadrature_error", 2.0 * quad.error)
        .with("intervals", quad.intervals as u64))
}

/// Distribution function of `β − β'` for the continuous laws.
fn difference_cdf(dist: &EntryDistribution, z: f64) -> f64 {
    match dist {
        // N(0, 2)
        EntryDistribution::Gaussian => normal_cdf(z / std::f64::consts::SQRT_2),
        // triangular on [−2√3, 2√3]
        EntryDistribution::UniformSym => {
            let w = 2.0 * 3f64.sqrt();
            if z <= -w {
                0.0
            } else if z >= w {
                1.0
            } else if z <= 0.0 {
                (z + w).powi(2) / (2.0 * w * w)
            } else {
                1.0 - (w - z).powi(2) / (2.0 * w * w)
            }
        }
        _ => unreachable!("finite-support laws use atoms"),
    }
}

/// `S_Δ(y) = Σ_j P(x_j(β_j − β_j') ∈ [y − πΔ, y + πΔ])`, evaluated exactly:
/// through the atoms of `β − β'` for finite laws and through the closed-form
/// law of `β − β'` for the Gaussian and uniform laws.
pub fn s_delta(x: &[f64], dist: &EntryDistribution, delta: f64, y: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::regime("s_delta", format!("Δ = {delta} must be positive")));
    }
    let half = PI * delta;
    let (lo, hi) = (y - half, y + half);
    let total = match dist.difference_atoms() {
        Some(atoms) => x
            .iter()
            .map(|&w| {
                atoms
                    .iter()
                    .filter(|&&(d, _)| {
                        let z = w.abs() * d;
                        lo <= z && z <= hi
                    })
                    .map(|a| a.1)
                    .sum::<f64>()
            })
            .sum(),
        None => x
            .iter()
            .filter(|&&w| w != 0.0)
            .map(|&w| {
                let a = w.abs();
                difference_cdf(dist, hi / a) - difference_cdf(dist, lo / a)
            })
            .sum(),
    };
    Ok(total)
}

/// `(1/(m^{5/2}Δ)) ∫_{3a/2}^{∞} S_Δ(y)² dy`, the Halász-type bound without
/// its constant and without the exponentially small additive term.
///
/// For finite laws `S_Δ` is a step function and the integral is summed
/// exactly over its breakpoints.
pub fn halasz_integral_bound(
    x: &[f64],
    dist: &EntryDistribution,
    delta: f64,
    a: f64,
) -> Result<ConcentrationEstimate> {
    const OP: &str = "halasz_integral_bound";
    if x.is_empty() {
        return Err(Error::regime(OP, "empty weight vector"));
    }
    if !(a > 0.0) {
        return Err(Error::regime(OP, format!("a = {a} must be positive")));
    }
    if !(delta > 0.0 && delta < a / (2.0 * PI)) {
        return Err(Error::regime(OP, format!("0 < Δ < a/(2π) fails: Δ = {delta}, a/(2π) = {}", a / (2.0 * PI))));
    }
    if let Some(w) = x.iter().find(|w| w.abs() < a) {
        return Err(Error::regime(OP, format!("|x_j| ≥ a fails: |{w}| < {a}")));
    }
    let m = x.len() as f64;
    let start = 1.5 * a;
    let max_w = x.iter().map(|w| w.abs()).fold(0.0, f64::max);
    let half = PI * delta;

    let (integral, path) = match dist.difference_atoms() {
        Some(atoms) => {
            let y_max = 2.0 * max_w * dist.support_radius() + half;
            // S is constant between consecutive interval endpoints
            let mut cuts: Vec<f64> = vec![start, y_max.max(start)];
            for &w in x {
                for &(d, _) in &atoms {
                    let c = w.abs() * d;
                    for e in [c - half, c + half] {
                        if e > start && e < y_max {
                            cuts.push(e);
                        }
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut sum = 0.0;
            for pair in cuts.windows(2) {
                let mid = 0.5 * (pair[0] + pair[1]);
                let s = s_delta(x, dist, delta, mid)?;
                sum += s * s * (pair[1] - pair[0]);
            }
            (sum, "piecewise_exact")
        }
        None => {
            let reach = match dist {
                EntryDistribution::Gaussian => 2.0 * max_w * 9.0 + half,
                _ => 2.0 * max_w * dist.support_radius() + half,
            };
            let quad = integrate(
                |y| {
                    let s = s_delta(x, dist, delta, y).expect("Δ checked");
                    s * s
                },
                start,
                reach.max(start),
                QUAD_TOL,
                QUAD_DEPTH,
            );
            (quad.value, "quadrature")
        }
    };
    let value = integral / (m.powf(2.5) * delta);
    Ok(ConcentrationEstimate::new(value, Method::HalaszIntegralBound)
        .with("integral", integral)
        .with("integration", path)
        .with("exponential_term", "omitted"))
}

/// `Σ_k P_k(x, Δ)² / m^{5/2}`, the profile form of the Halász bound.
///
/// `a` is taken as `min |x_j|`; the spread `C̄ = max|x_j| / min|x_j|` is
/// reported since the fitted constant depends on it.
pub fn halasz_profile_bound(x: &[f64], delta: f64) -> Result<ConcentrationEstimate> {
    const OP: &str = "halasz_profile_bound";
    if x.is_empty() {
        return Err(Error::regime(OP, "empty weight vector"));
    }
    let a = x.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
    let max_w = x.iter().map(|w| w.abs()).fold(0.0, f64::max);
    if !(a > 0.0) {
        return Err(Error::regime(OP, "a = min|x_j| must be positive"));
    }
    if !(delta > 0.0 && delta < a / (2.0 * PI)) {
        return Err(Error::regime(OP, format!("0 < Δ < a/(2π) fails: Δ = {delta}, a/(2π) = {}", a / (2.0 * PI))));
    }
    let profile = delta_profile(x, delta);
    let ssq = profile.sum_of_squares();
    let m = x.len() as f64;
    Ok(
        ConcentrationEstimate::new(ssq as f64 / m.powf(2.5), Method::HalaszProfileBound)
            .with("sum_of_squares", ssq)
            .with("a", a)
            .with("spread", max_w / a),
    )
}

/// Declared coordinate window `r/√m ≤ |x_j| ≤ R/√m` and the lower limit
/// `t ≥ c/√m` for the Berry–Esseen bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenRegime {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub c: f64,
}

/// Gaussian window mass plus twice the Berry–Esseen error with universal
/// constant 1: `Φ((v+t)/A) − Φ((v−t)/A) + 2 E|β|³ Σ|x_j|³ / A³`, `A = ‖x‖`.
pub fn berry_esseen_bound(q: &SmallBallQuery, regime: &BerryEsseenRegime) -> Result<ConcentrationEstimate> {
    const OP: &str = "berry_esseen_bound";
    q.validate()?;
    let m = q.x.len() as f64;
    let lo = regime.r / m.sqrt();
    let hi = regime.big_r / m.sqrt();
    let slack = 1e-12;
    if let Some(w) = q.x.iter().find(|w| w.abs() < lo * (1.0 - slack) || w.abs() > hi * (1.0 + slack)) {
        return Err(Error::regime(OP, format!("r/√m ≤ |x_j| ≤ R/√m fails at |{w}| (window [{lo}, {hi}])")));
    }
    if q.t < regime.c / m.sqrt() {
        return Err(Error::regime(OP, format!("t ≥ c/√m fails: t = {}, c/√m = {}", q.t, regime.c / m.sqrt())));
    }
    let norm = q.l2_norm();
    let gaussian = normal_cdf((q.v + q.t) / norm) - normal_cdf((q.v - q.t) / norm);
    let third: f64 = q.x.iter().map(|w| w.abs().powi(3)).sum();
    let error = 2.0 * q.dist.abs_moment(3.0) * third / norm.powi(3);
    Ok(ConcentrationEstimate::new(gaussian + error, Method::BerryEsseenBound)
        .with("gaussian_mass", gaussian)
        .with("berry_esseen_error", error))
}

/// Constant of the tensorization bound from its proof: `e · C̄` with
/// `C̄ = ∫_0^1 u e^{−u²/2} du + ∫_1^∞ u² e^{−u²/2} du = 1 + √(2π)(1 − Φ(1))`.
pub fn tensorization_constant() -> f64 {
    std::f64::consts::E * (1.0 + (2.0 * PI).sqrt() * (1.0 - normal_cdf(1.0)))
}

/// `(C · L · Δ)^n`: small-ball bound for a vector of `n` independent
/// coordinates each obeying a linear small-ball bound with slope `L`.
pub fn tensorization_bound(l: f64, delta: f64, n: usize, constant: f64) -> Result<f64> {
    if !(l > 0.0 && delta > 0.0) {
        return Err(Error::regime("tensorization_bound", "L and Δ must be positive"));
    }
    Ok((constant * l * delta).powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::small_ball::exact_concentration;
    use approx::assert_relative_eq;

    fn rad(x: Vec<f64>, v: f64, t: f64) -> SmallBallQuery {
        SmallBallQuery::new(x, EntryDistribution::Rademacher, v, t).unwrap()
    }

    #[test]
    fn esseen_single_sign() {
        let e = esseen_bound(&rad(vec![1.0], 0.0, 1.0)).unwrap();
        assert_relative_eq!(e.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn esseen_symmetries() {
        let a = esseen_bound(&rad(vec![0.6, 0.8], 0.0, 0.3)).unwrap().value;
        let b = esseen_bound(&rad(vec![0.8, -0.6], 0.0, 0.3)).unwrap().value;
        assert_relative_eq!(a, b, epsilon = 1e-12);
        let padded = esseen_bound(&rad(vec![0.0, 0.0, 1.0], 0.0, 0.7)).unwrap().value;
        let single = esseen_bound(&rad(vec![1.0], 0.0, 0.7)).unwrap().value;
        assert_relative_eq!(padded, single, epsilon = 1e-12);
    }

    #[test]
    fn esseen_gaussian_closed_form() {
        // ∫ exp(−s²‖x‖²/(2t²)) over [−π/2, π/2]
        let q = SmallBallQuery::new(vec![0.6, 0.8], EntryDistribution::Gaussian, 0.0, 0.5).unwrap();
        let k = 1.0 / 0.5;
        let expected = (2.0 * PI).sqrt() / k * (2.0 * normal_cdf(k * PI / 2.0) - 1.0);
        assert_relative_eq!(esseen_bound(&q).unwrap().value, expected, epsilon = 1e-8);
    }

    #[test]
    fn s_delta_examples() {
        let r = EntryDistribution::Rademacher;
        assert_relative_eq!(s_delta(&[1.0, 1.0], &r, 0.1, 2.0).unwrap(), 0.5);
        assert_eq!(s_delta(&[1.0, 1.0], &r, 0.1, 2.0 + 0.1 * PI + 0.01).unwrap(), 0.0);
        for y in [0.0, 0.3, 1.9, 2.1] {
            assert_eq!(s_delta(&[1.0, 0.7], &r, 0.1, y).unwrap(), s_delta(&[1.0, 0.7], &r, 0.1, -y).unwrap());
        }
    }

    #[test]
    fn s_delta_continuous_matches_sampling() {
        let mut rng = crate::rng::RngStream::new(12);
        for dist in [EntryDistribution::Gaussian, EntryDistribution::UniformSym] {
            let (x, delta, y) = ([0.7, 1.2], 0.2, 1.1);
            let exact = s_delta(&x, &dist, delta, y).unwrap();
            let n = 400_000;
            let mut hits = 0.0;
            for _ in 0..n {
                for w in x {
                    let z = w * (dist.sample(&mut rng) - dist.sample(&mut rng));
                    if (z - y).abs() <= PI * delta {
                        hits += 1.0;
                    }
                }
            }
            assert!((hits / n as f64 - exact).abs() < 0.005, "{dist}: {exact}");
        }
    }

    #[test]
    fn halasz_integral_single_atom_geometry() {
        for m in [1usize, 4, 9, 16] {
            let x = vec![1.0; m];
            let b = halasz_integral_bound(&x, &EntryDistribution::Rademacher, 0.1, 1.0).unwrap();
            let expected = PI / 8.0 / (m as f64).sqrt();
            assert_relative_eq!(b.value, expected, epsilon = 1e-12);
            // quadrature cross-check of the step-function integral
            let quad = integrate(
                |y| s_delta(&x, &EntryDistribution::Rademacher, 0.1, y).unwrap().powi(2),
                1.5,
                3.0,
                1e-10,
                50,
            );
            assert_relative_eq!(b.metadata["integral"].as_f64().unwrap(), quad.value, epsilon = 1e-6);
        }
        let doubled = halasz_integral_bound(&[1.0; 4], &EntryDistribution::Rademacher, 0.05, 1.0).unwrap();
        assert_relative_eq!(doubled.value, PI / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn halasz_integral_regime() {
        let r = EntryDistribution::Rademacher;
        assert!(halasz_integral_bound(&[1.0], &r, 0.2, 1.0).is_err());
        assert!(halasz_integral_bound(&[0.5, 1.0], &r, 0.1, 1.0).is_err());
        let g = halasz_integral_bound(&[1.0, 1.3], &EntryDistribution::Gaussian, 0.1, 1.0).unwrap();
        assert!(g.value > 0.0 && g.value.is_finite());
    }

    #[test]
    fn halasz_profile_examples() {
        let one_bin = vec![1.0; 16];
        assert_relative_eq!(halasz_profile_bound(&one_bin, 0.1).unwrap().value, 0.25, epsilon = 1e-15);
        let four_bins: Vec<f64> = (0..16).map(|i| 1.05 + 0.1 * (i % 4) as f64).collect();
        assert_relative_eq!(halasz_profile_bound(&four_bins, 0.1).unwrap().value, 0.0625, epsilon = 1e-15);
        let three_one = [1.05, 1.06, 1.07, 1.15];
        assert_relative_eq!(halasz_profile_bound(&three_one, 0.1).unwrap().value, 0.3125, epsilon = 1e-15);
        assert!(halasz_profile_bound(&[1.0, 0.1], 0.1).is_err());
    }

    #[test]
    fn halasz_profile_spreading_lowers_bound() {
        // m = 12 fixed, moved from 1 bin to 2, 3, 4, 6, 12 bins
        let mut prev = f64::INFINITY;
        for bins in [1usize, 2, 3, 4, 6, 12] {
            let x: Vec<f64> = (0..12).map(|i| 2.05 + 0.1 * (i % bins) as f64).collect();
            let b = halasz_profile_bound(&x, 0.1).unwrap().value;
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn berry_esseen_examples() {
        let regime = BerryEsseenRegime { r: 0.5, big_r: 2.0, c: 1.0 };
        let m = 100;
        let q = rad(vec![0.1; m], 0.0, 0.2);
        let be = berry_esseen_bound(&q, &regime).unwrap();
        let exact = exact_concentration(&q).unwrap().value;
        assert!(be.value >= exact);

        let single = BerryEsseenRegime { r: 1.0, big_r: 1.0, c: 0.5 };
        let q = rad(vec![1.0], 0.0, 0.5);
        assert!(berry_esseen_bound(&q, &single).unwrap().value >= 0.5);

        assert!(berry_esseen_bound(&rad(vec![0.1; m], 0.0, 0.05), &regime).is_err());
        assert!(berry_esseen_bound(&rad(vec![0.5; 4], 0.0, 0.6), &regime).is_ok());
        assert!(berry_esseen_bound(&rad(vec![1.5, 0.5, 0.5, 0.5], 0.0, 0.6), &regime).is_err());
    }

    #[test]
    fn atom_at_zero_needs_t_of_order_inverse_sqrt_m() {
        // P(Σ ε_j = 0) = C(m, m/2) 2^{-m} ≥ 1/√(2m)
        for m in [4usize, 16, 64, 256] {
            let atom = (statrs::function::factorial::ln_binomial(m as u64, m as u64 / 2)
                - m as f64 * std::f64::consts::LN_2)
                .exp();
            assert!(atom >= 1.0 / (2.0 * m as f64).sqrt());
            let x = vec![1.0 / (m as f64).sqrt(); m];
            if m <= 16 {
                let tiny = exact_concentration(&rad(x, 0.0, 1e-6)).unwrap().value;
                assert_relative_eq!(tiny, atom, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tensorization_examples() {
        assert_relative_eq!(tensorization_bound(1.0, 0.1, 2, 3.0).unwrap(), 0.09, epsilon = 1e-15);
        assert_relative_eq!(tensorization_bound(2.0, 0.1, 1, 3.0).unwrap(), 0.6, epsilon = 1e-15);
        let base = tensorization_bound(1.0, 0.05, 5, 3.0).unwrap();
        let doubled = tensorization_bound(1.0, 0.1, 5, 3.0).unwrap();
        assert_relative_eq!(doubled / base, 32.0, epsilon = 1e-12);
        assert_relative_eq!(tensorization_constant(), 3.7994, epsilon = 1e-3);
    }

    #[test]
    fn tensorization_dominates_gaussian_vector() {
        // y standard Gaussian: P(|y_i − v| < t) ≤ √(2/π) t, and
        // P(‖y‖ ≤ Δ√n) is the χ²_n distribution function at Δ²n.
        let l = (2.0 / PI).sqrt();
        for n in [1usize, 2, 5, 10, 40] {
            for delta in [0.05, 0.1, 0.2, 0.3] {
                let x = delta * delta * n as f64;
                let prob = statrs::function::gamma::gamma_lr(n as f64 / 2.0, x / 2.0);
                let bound = tensorization_bound(l, delta, n, tensorization_constant()).unwrap();
                assert!(prob <= bound, "n={n} Δ={delta}: {prob} > {bound}");
            }
        }
    }
}
