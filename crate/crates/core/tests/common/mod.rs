//! Reference implementations shared by the integration tests.
#![allow(dead_code)]

use rmlab::matrices::{sample_matrix, IterationOptions, SquareMatrix};
use rmlab::rng::derive_seed;
use rmlab::small_ball::{exact_by_convolution, exact_by_enumeration, SmallBallQuery};
use rmlab::sphere_profile::min_half_subset_ssq;
use rmlab::{derive_stream, EntryDistribution};

/// Tight tolerance for comparisons against the oracles.
pub fn tight() -> IterationOptions<f64> {
    IterationOptions {
        tol: 1e-15,
        max_iter: 200_000,
    }
}

/// Singular values, descending, by one-sided Jacobi rotations on the columns.
pub fn jacobi_singular_values(a: &SquareMatrix<f64>) -> Vec<f64> {
    let n = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Minimum of `Σ (kept in bin)²` over every subset of `keep` items, items
/// listed one by one.
pub fn subset_min_ssq(occupancy: &[usize], keep: usize) -> u64 {
    let items: Vec<usize> = occupancy.iter().enumerate().flat_map(|(b, &o)| std::iter::repeat_n(b, o)).collect();
    let mut best = u64::MAX;
    for mask in 0u32..(1 << items.len()) {
        if mask.count_ones() as usize != keep {
            continue;
        }
        let mut counts = vec![0u64; occupancy.len()];
        for (i, &b) in items.iter().enumerate() {
            if mask >> i & 1 == 1 {
                counts[b] += 1;
            }
        }
        best = best.min(counts.iter().map(|c| c * c).sum());
    }
    best
}

/// Subset-minimum instances with total count ≤ 12; returns (checked, mismatches).
pub fn subset_oracle(instances: usize, seed: u64) -> (usize, usize) {
    let mut mismatches = 0;
    for i in 0..instances {
        let mut rng = derive_stream(seed, i as u64);
        let bins = 1 + rng.below(6);
        let mut occupancy = vec![0usize; bins];
        let total = 1 + rng.below(12);
        for _ in 0..total {
            occupancy[rng.below(bins)] += 1;
        }
        let keep = rng.below(total + 1);
        let fast = min_half_subset_ssq(&occupancy, keep).unwrap().min_ssq;
        if fast != subset_min_ssq(&occupancy, keep) {
            mismatches += 1;
        }
    }
    (instances, mismatches)
}

fn random_query(seed: u64, i: u64) -> SmallBallQuery {
    let mut rng = derive_stream(seed, i);
    let m = 1 + rng.below(10);
    let dist = match rng.below(3) {
        0 => EntryDistribution::Rademacher,
        1 => "discrete:-1.4142135623730951:0.25,0:0.5,1.4142135623730951:0.25".parse().unwrap(),
        _ => "discrete:-0.7071067811865476:0.6666666666666666,1.4142135623730951:0.3333333333333334"
            .parse()
            .unwrap(),
    };
    let x: Vec<f64> = (0..m).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let v = rng.uniform() - 0.5;
    let t = 0.05 + rng.uniform();
    SmallBallQuery::new(x, dist, v, t).unwrap()
}

/// Enumeration against grid convolution; a mismatch is an enumeration value
/// outside the interval the convolution reports.
pub fn convolution_oracle(instances: usize, seed: u64) -> (usize, usize) {
    let mut mismatches = 0;
    for i in 0..instances {
        let q = random_query(seed, i as u64);
        let exact = exact_by_enumeration(&q).unwrap().value;
        let conv = exact_by_convolution(&q, q.t / 100.0).unwrap();
        let (lo, hi) = conv.ci.unwrap();
        if !(lo - 1e-12 <= exact && exact <= hi + 1e-12) {
            mismatches += 1;
        }
    }
    (instances, mismatches)
}

/// Largest deviation of the iterative extreme singular values from Jacobi,
/// over `count` matrices with `n ≤ 6`.
pub fn spectral_oracle(count: usize, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let n = 1 + (i % 6);
        let dist = if i % 2 == 0 { EntryDistribution::Gaussian } else { EntryDistribution::UniformSym };
        let sample = sample_matrix::<f64>(&dist, n, derive_seed(seed, i as u64)).unwrap();
        let s = jacobi_singular_values(&sample.matrix);
        let summary = sample.spectral_summary(tight());
        assert!(summary.converged, "matrix {i} did not converge");
        worst = worst.max((summary.op_norm - s[0]).abs());
        worst = worst.max((summary.sigma_min - s[n - 1]).abs());
    }
    worst
}
