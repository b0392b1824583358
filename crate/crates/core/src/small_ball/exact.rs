use rayon::prelude::*;

use super::{ConcentrationEstimate, Method, SmallBallQuery};
use crate::distributions::EntryDistribution;
use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::stats::clopper_pearson;

/// Largest number of sign/atom patterns enumerated directly.
pub const ENUMERATION_LIMIT: f64 = (1u64 << 24) as f64;

/// Largest grid the convolution path will allocate.
const GRID_LIMIT: usize = 1 << 26;

const MC_BLOCK: u64 = 8192;

fn finite_atoms(q: &SmallBallQuery, op: &'static str) -> Result<Vec<(f64, f64)>> {
    q.validate()?;
    q.dist.atoms().ok_or_else(|| {
        Error::regime(op, format!("{} has continuous support; use monte_carlo", q.dist))
    })
}

/// Exact small-ball probability: enumeration when the pattern count is at
/// most 2²⁴, otherwise grid convolution with resolution `t/100`.
pub fn exact_concentration(q: &SmallBallQuery) -> Result<ConcentrationEstimate> {
    let atoms = finite_atoms(q, "exact_concentration")?;
    let patterns = (atoms.len() as f64).powi(q.x.len() as i32);
    if patterns <= ENUMERATION_LIMIT {
        exact_by_enumeration(q)
    } else {
        exact_by_convolution(q, q.t / 100.0)
    }
}

/// Sums the probability of every atom pattern whose sum lies in the open
/// window `|S − v| < t`.
pub fn exact_by_enumeration(q: &SmallBallQuery) -> Result<ConcentrationEstimate> {
    let atoms = finite_atoms(q, "exact_by_enumeration")?;
    let patterns = (atoms.len() as f64).powi(q.x.len() as i32);
    if patterns > ENUMERATION_LIMIT {
        return Err(Error::regime(
            "exact_by_enumeration",
            format!("{patterns} patterns exceed the enumeration limit"),
        ));
    }
    fn walk(x: &[f64], atoms: &[(f64, f64)], sum: f64, prob: f64, v: f64, t: f64) -> f64 {
        match x.split_first() {
            None => {
                if (sum - v).abs() < t {
                    prob
                } else {
                    0.0
                }
            }
            Some((&w, rest)) => atoms
                .iter()
                .map(|&(a, p)| walk(rest, atoms, sum + w * a, prob * p, v, t))
                .sum(),
        }
    }
    let value = walk(&q.x, &atoms, 0.0, 1.0, q.v, q.t).min(1.0);
    Ok(ConcentrationEstimate::new(value, Method::Exact).with("patterns", patterns))
}

/// Largest pattern count [`levy_concentration`] will materialize.
pub const LEVY_LIMIT: f64 = (1u64 << 22) as f64;

/// Concentration function `sup_v P(|S − v| < t)` by enumerating the atoms of
/// `S` and sliding an open window of width `2t` over them.
pub fn levy_concentration(x: &[f64], dist: &EntryDistribution, t: f64) -> Result<f64> {
    let q = SmallBallQuery::new(x.to_vec(), dist.clone(), 0.0, t)?;
    let atoms = finite_atoms(&q, "levy_concentration")?;
    let patterns = (atoms.len() as f64).powi(x.len() as i32);
    if patterns > LEVY_LIMIT {
        return Err(Error::regime(
            "levy_concentration",
            format!("{patterns} patterns exceed the limit {LEVY_LIMIT}"),
        ));
    }
    let mut sums: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for &w in x {
        sums = sums
            .iter()
            .flat_map(|&(s, p)| atoms.iter().map(move |&(a, pa)| (s + w * a, p * pa)))
            .collect();
    }
    sums.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut best, mut mass, mut lo) = (0.0f64, 0.0, 0);
    for hi in 0..sums.len() {
        mass += sums[hi].1;
        while sums[hi].0 - sums[lo].0 >= 2.0 * t {
            mass -= sums[lo].1;
            lo += 1;
        }
        best = best.max(mass);
    }
    Ok(best.min(1.0))
}

/// Grid convolution: each term `x_j a` is moved to the nearest multiple of
/// the grid step (half-up), so the gridded sum is within `h` of the true sum
/// and the mass within `h` of the window edges bounds the error.
pub fn exact_by_convolution(q: &SmallBallQuery, h: f64) -> Result<ConcentrationEstimate> {
    let atoms = finite_atoms(q, "exact_by_convolution")?;
    if !(h > 0.0 && h <= q.t / 100.0 * (1.0 + 1e-12)) {
        return Err(Error::regime("exact_by_convolution", format!("resolution {h} must be in (0, t/100]")));
    }
    let terms: Vec<f64> = q.x.iter().copied().filter(|&w| w != 0.0).collect();
    let step = 2.0 * h / terms.len() as f64;
    let snap = |value: f64| (value / step + 0.5).floor() as i64;

    let mut displacement = 0.0;
    let mut dist: Vec<f64> = vec![1.0];
    let mut offset: i64 = 0;
    for &w in &terms {
        let shifted: Vec<(i64, f64)> = atoms.iter().map(|&(a, p)| (snap(w * a), p)).collect();
        displacement += atoms
            .iter()
            .map(|&(a, _)| (w * a - snap(w * a) as f64 * step).abs())
            .fold(0.0, f64::max);
        let lo = shifted.iter().map(|s| s.0).min().expect("atoms");
        let hi = shifted.iter().map(|s| s.0).max().expect("atoms");
        let len = dist.len() + (hi - lo) as usize;
        if len > GRID_LIMIT {
            return Err(Error::regime(
                "exact_by_convolution",
                format!("grid of {len} points exceeds the limit"),
            ));
        }
        let mut next = vec![0.0; len];
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(s, p) in &shifted {
                next[i + (s - lo) as usize] += mass * p;
            }
        }
        dist = next;
        offset += lo;
    }
    // rounding slack for evaluating grid positions
    let radius_h = displacement * (1.0 + 1e-9) + 1e-12 * (q.l1_norm() * q.dist.support_radius() + q.v.abs());
    let mut inside = 0.0;
    let mut ambiguous = 0.0;
    for (i, &mass) in dist.iter().enumerate() {
        let s = (i as i64 + offset) as f64 * step;
        let d = (s - q.v).abs();
        if d < q.t {
            inside += mass;
        }
        if d >= q.t - radius_h && d < q.t + radius_h {
            ambiguous += mass;
        }
    }
    let value = inside.clamp(0.0, 1.0);
    let est = ConcentrationEstimate {
        ci: Some(((value - ambiguous).max(0.0), (value + ambiguous).min(1.0))),
        ..ConcentrationEstimate::new(value, Method::Convolution)
    };
    Ok(est
        .with("grid_step", step)
        .with("resolution", h)
        .with("displacement", displacement)
        .with("error_radius", ambiguous)
        .with("grid_points", dist.len() as u64))
}

/// Hit counts of `|S − v| < t` for every `t` in `ts`, sharing the same
/// draws. Blocks of trials use streams derived from `(seed, block)`, so the
/// counts do not depend on the thread count.
pub fn monte_carlo_window_counts(
    x: &[f64],
    dist: &EntryDistribution,
    v: f64,
    ts: &[f64],
    trials: u64,
    seed: u64,
) -> Vec<u64> {
    let blocks = trials.div_ceil(MC_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = derive_stream(seed, b);
            let count = MC_BLOCK.min(trials - b * MC_BLOCK);
            let mut hits = vec![0u64; ts.len()];
            for _ in 0..count {
                let s: f64 = x.iter().map(|&w| w * dist.sample(&mut rng)).sum();
                let d = (s - v).abs();
                for (h, &t) in hits.iter_mut().zip(ts) {
                    if d < t {
                        *h += 1;
                    }
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; ts.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Monte Carlo estimate with a 95% Clopper–Pearson interval.
pub fn monte_carlo_concentration(q: &SmallBallQuery, trials: u64, seed: u64) -> Result<ConcentrationEstimate> {
    q.validate()?;
    if trials < 100 {
        return Err(Error::config(format!("monte carlo needs at least 100 trials, got {trials}")));
    }
    let hits = monte_carlo_window_counts(&q.x, &q.dist, q.v, &[q.t], trials, seed)[0];
    let est = ConcentrationEstimate {
        ci: Some(clopper_pearson(hits, trials, 0.95)),
        ..ConcentrationEstimate::new(hits as f64 / trials as f64, Method::MonteCarlo)
    };
    Ok(est.with("trials", trials).with("hits", hits).with("seed", seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rad(x: Vec<f64>, v: f64, t: f64) -> SmallBallQuery {
        SmallBallQuery::new(x, EntryDistribution::Rademacher, v, t).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let s = 0.5f64.sqrt();
        assert_eq!(exact_concentration(&rad(vec![s, s], 0.0, 0.1)).unwrap().value, 0.5);
        assert_eq!(exact_concentration(&rad(vec![0.5; 4], 0.0, 0.1)).unwrap().value, 0.375);
        assert_eq!(exact_concentration(&rad(vec![1.0], 1.0, 0.5)).unwrap().value, 0.5);
    }

    #[test]
    fn levy_concentration_takes_sup_over_centers() {
        // sums of four halves: atoms −2, −1, 0, 1, 2 with weights 1, 4, 6, 4, 1
        let x = vec![0.5; 4];
        let rad = EntryDistribution::Rademacher;
        assert_relative_eq!(levy_concentration(&x, &rad, 0.1).unwrap(), 6.0 / 16.0);
        // the open window of width 2 holds two adjacent atoms, a wider one three
        assert_relative_eq!(levy_concentration(&x, &rad, 1.0).unwrap(), 10.0 / 16.0);
        assert_relative_eq!(levy_concentration(&x, &rad, 1.0 + 1e-9).unwrap(), 14.0 / 16.0);
        // single atom at 1: the window centred at v = 1 takes it all
        assert_relative_eq!(levy_concentration(&[1.0], &"discrete:-1:0.5,1:0.5".parse().unwrap(), 0.5).unwrap(), 0.5);
        let mut rng = RngStream::new(31);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.uniform() - 0.5).collect();
            let t = 0.05 + 0.3 * rng.uniform();
            let sup = levy_concentration(&x, &rad, t).unwrap();
            for k in -20..=20 {
                let v = k as f64 * 0.07;
                let at_v = exact_concentration(&rad_q(x.clone(), v, t)).unwrap().value;
                assert!(at_v <= sup + 1e-12);
            }
        }
    }

    fn rad_q(x: Vec<f64>, v: f64, t: f64) -> SmallBallQuery {
        rad(x, v, t)
    }

    #[test]
    fn window_is_open() {
        // sums are ±1: distance exactly t from v = 0 is excluded
        assert_eq!(exact_concentration(&rad(vec![1.0], 0.0, 1.0)).unwrap().value, 0.0);
        assert_eq!(exact_concentration(&rad(vec![1.0], 0.0, 1.0 + 1e-9)).unwrap().value, 1.0);
    }

    #[test]
    fn continuous_laws_rejected() {
        let q = SmallBallQuery::new(vec![1.0], EntryDistribution::Gaussian, 0.0, 0.1).unwrap();
        assert!(exact_concentration(&q).is_err());
        assert!(SmallBallQuery::new(vec![0.0, 0.0], EntryDistribution::Gaussian, 0.0, 0.1).is_err());
        assert!(SmallBallQuery::new(vec![1.0], EntryDistribution::Gaussian, 0.0, 0.0).is_err());
    }

    #[test]
    fn large_instances_use_convolution() {
        let q = rad(vec![0.2; 30], 0.0, 0.05);
        let e = exact_concentration(&q).unwrap();
        assert_eq!(e.method, Method::Convolution);
        // Σ ε_j over 30 signs is even; |0.2 Σ ε| < 0.05 iff the sum is 0
        let expected = statrs::function::factorial::binomial(30, 15) / 2f64.powi(30);
        let radius = e.metadata["error_radius"].as_f64().unwrap();
        assert!((e.value - expected).abs() <= radius + 1e-12);
        assert_relative_eq!(e.value, expected, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_matches_oracle() {
        let s = 0.5f64.sqrt();
        let e = monte_carlo_concentration(&rad(vec![s, s], 0.0, 0.1), 100_000, 4).unwrap();
        assert!((e.value - 0.5).abs() < 0.01);
        let (lo, hi) = e.ci.unwrap();
        assert!(lo <= e.value && e.value <= hi);
        assert!(monte_carlo_concentration(&rad(vec![s, s], 0.0, 0.1), 0, 4).is_err());
        assert!(monte_carlo_concentration(&rad(vec![s, s], 0.0, 0.1), 99, 4).is_err());
    }

    #[test]
    fn clopper_pearson_coverage() {
        let q = SmallBallQuery::new(
            vec![0.4, 0.3, 0.5, 0.2, 0.6],
            "discrete:-2:0.2,0.5:0.8".parse().unwrap(),
            0.3,
            0.4,
        )
        .unwrap();
        let exact = exact_concentration(&q).unwrap().value;
        let covered = (0..100u64)
            .filter(|&rep| {
                let (lo, hi) = monte_carlo_concentration(&q, 500, 1000 + rep).unwrap().ci.unwrap();
                lo <= exact && exact <= hi
            })
            .count();
        assert!(covered >= 93, "coverage {covered}/100");
    }

    #[test]
    fn monotone_in_t_and_saturates() {
        let mut rng = RngStream::new(8);
        let x: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
        let mut prev = 0.0;
        for i in 1..40 {
            let t = 0.1 * i as f64;
            let p = exact_concentration(&rad(x.clone(), 0.3, t)).unwrap().value;
            assert!(p >= prev);
            prev = p;
        }
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let p = exact_concentration(&rad(x.clone(), 0.3, l1 + 0.3 + 1e-9)).unwrap().value;
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn symmetric_in_center(
            x in proptest::collection::vec(-1.0f64..1.0, 1..9),
            v in -2.0f64..2.0,
            t in 0.01f64..1.0,
        ) {
            prop_assume!(x.iter().any(|&w| w != 0.0));
            let a = exact_concentration(&rad(x.clone(), v, t)).unwrap().value;
            let b = exact_concentration(&rad(x, -v, t)).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn convolution_brackets_enumeration(
            x in proptest::collection::vec(-1.0f64..1.0, 1..10),
            v in -1.0f64..1.0,
            t in 0.02f64..0.8,
        ) {
            prop_assume!(x.iter().any(|&w| w != 0.0));
            let q = rad(x, v, t);
            let e = exact_by_enumeration(&q).unwrap().value;
            let c = exact_by_convolution(&q, t / 100.0).unwrap();
            let radius = c.metadata["error_radius"].as_f64().unwrap();
            prop_assert!((e - c.value).abs() <= radius + 1e-12, "{e} vs {} ± {radius}", c.value);
        }
    }
}
